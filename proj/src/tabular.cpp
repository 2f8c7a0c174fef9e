#include "fedgrid/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedgrid {

int GridSpec::num_cells() const {
  int n = 1;
  for (int f = 0; f < features; ++f) n *= bins_per_feature;
  return n;
}

int GridSpec::cell_of(const Eigen::Vector4d& normalized) const {
  int cell = 0;
  for (int f = 0; f < features; ++f) {
    const double x = std::clamp(normalized(f), 0.0, 1.0);
    int bin = static_cast<int>(x * bins_per_feature);
    bin = std::min(bin, bins_per_feature - 1);
    cell = cell * bins_per_feature + bin;
  }
  return cell;
}

TabularQ::TabularQ(int num_cells, int num_actions)
    : cells_(num_cells), actions_(num_actions),
      table_(static_cast<std::size_t>(num_cells) * num_actions, 0.0) {}

int TabularQ::index(int cell, int action) const {
  if (cell < 0 || cell >= cells_ || action < 0 || action >= actions_) {
    throw std::runtime_error("tabular Q: cell/action out of grid");
  }
  return cell * actions_ + action;
}

int TabularQ::greedy(int cell) const {
  int best = 0;
  for (int a = 1; a < actions_; ++a) {
    if (q(cell, a) > q(cell, best)) best = a;
  }
  return best;
}

double TabularQ::max_q(int cell) const { return q(cell, greedy(cell)); }

void tabular_q_update(TabularQ& table, int s_cell, int action, double reward,
                      int next_cell, double alpha, double gamma) {
  const double old = table.q(s_cell, action);
  const double td = reward + gamma * table.max_q(next_cell) - old;
  table.set_q(s_cell, action, old + alpha * td);
}

}  // namespace fedgrid
