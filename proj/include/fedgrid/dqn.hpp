#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fedgrid/env.hpp"
#include "fedgrid/nn.hpp"
#include "fedgrid/replay.hpp"

namespace fedgrid {

struct DqnConfig {
  double gamma = 0.99;
  double lr = 5e-4;
  double epsilon_min = 0.05;
  long epsilon_decay_steps = 10000;
  long target_update_steps = 500;  // hard target copy period
  std::vector<int> hidden = {256, 256};
  int start_timesteps = 1000;
  int batch_size = 256;
  int replay_capacity = 100000;
};

/// Vanilla DQN baseline: target net, replay, linearly decayed epsilon-greedy.
class DqnAgent {
 public:
  DqnAgent(int state_dim, int num_actions, DqnConfig config, std::uint64_t init_seed);

  double epsilon(long t) const;
  Action select_action(const Eigen::Vector4d& state, Rng& rng, long t,
                       bool explore) const;

  double update(const std::vector<Transition>& batch);
  void sync_target() { q_target_ = q_net_; }

  const DqnConfig& config() const { return config_; }
  Mlp& q_net() { return q_net_; }
  Mlp& q_target() { return q_target_; }

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);
  bool all_finite() const;

 private:
  DqnConfig config_;
  Mlp q_net_, q_target_;
  AdamState opt_;
};

struct DqnStepInfo {
  bool updated = false;
  double loss = 0.0;
};

DqnStepInfo dqn_train_step(DqnAgent& agent, ReplayBuffer& buffer,
                           const Transition& transition, long t, Rng& replay_rng);

}  // namespace fedgrid
