#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fedgrid/env.hpp"
#include "fedgrid/rng.hpp"

namespace fedgrid {

/// Uniform discretization of the normalized [0,1]^4 state space.
struct GridSpec {
  int bins_per_feature = 3;
  int features = 4;

  int num_cells() const;
  int cell_of(const Eigen::Vector4d& normalized) const;
};

/// Tabular Q-learning over a discretized state grid. Serves as an
/// independently checkable oracle and a simple baseline.
class TabularQ {
 public:
  TabularQ(int num_cells, int num_actions);

  double q(int cell, int action) const { return table_[index(cell, action)]; }
  void set_q(int cell, int action, double v) { table_[index(cell, action)] = v; }
  int greedy(int cell) const;
  double max_q(int cell) const;
  int num_cells() const { return cells_; }
  int num_actions() const { return actions_; }
  const std::vector<double>& table() const { return table_; }

 private:
  int index(int cell, int action) const;
  int cells_, actions_;
  std::vector<double> table_;
};

/// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))
void tabular_q_update(TabularQ& table, int s_cell, int action, double reward,
                      int next_cell, double alpha, double gamma);

}  // namespace fedgrid
