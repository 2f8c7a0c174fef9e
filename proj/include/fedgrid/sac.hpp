#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "fedgrid/env.hpp"
#include "fedgrid/nn.hpp"
#include "fedgrid/replay.hpp"

namespace fedgrid {

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  int freq = 2;  // actor/temperature/target update period, in steps
  double actor_lr = 5e-4;
  double critic_lr = 5e-4;
  double alpha_lr = 5e-4;
  std::vector<int> hidden = {256, 256};
  double target_entropy = -3.0;  // -dim(Action) default
  double init_alpha = 0.2;
  // Standard SAC keeps the entropy term inside the discounted bootstrap;
  // false reproduces the literal target formula with the term outside it.
  bool entropy_in_bootstrap = true;
  // When true a third, otherwise unused target net shadows the actor.
  bool use_actor_target = false;
  int start_timesteps = 1000;
  int batch_size = 256;
  int replay_capacity = 100000;
};

/// Discrete soft actor-critic with clipped double Q-learning and learned
/// temperature. All expectations over the 3-action categorical policy are
/// computed exactly instead of sampled.
class SacAgent {
 public:
  SacAgent(int state_dim, int num_actions, SacConfig config, std::uint64_t init_seed);

  Action select_action(const Eigen::Vector4d& state, Rng& rng, bool explore) const;

  double critic_target(double reward, const Eigen::Vector4d& next_state,
                       bool done) const;
  Eigen::VectorXd critic_targets_batch(const std::vector<Transition>& batch) const;

  // One Adam step per critic toward the shared target; returns pre-step MSEs.
  std::pair<double, double> critic_update(const std::vector<Transition>& batch);
  double actor_update(const std::vector<Transition>& batch);
  double temperature_update(const std::vector<Transition>& batch);
  void polyak_update(double tau);

  // Policy objective and its actor-parameter gradients, exposed for
  // finite-difference verification.
  double actor_objective(const std::vector<Transition>& batch) const;
  MlpGrads actor_gradients(const std::vector<Transition>& batch) const;

  double alpha() const { return std::exp(log_alpha_); }
  double log_alpha() const { return log_alpha_; }
  void set_log_alpha(double v) { log_alpha_ = v; }
  const SacConfig& config() const { return config_; }

  Mlp& actor() { return actor_; }
  const Mlp& actor() const { return actor_; }
  Mlp& critic1() { return critic1_; }
  Mlp& critic2() { return critic2_; }
  Mlp& target1() { return target1_; }
  Mlp& target2() { return target2_; }
  const Mlp& target1() const { return target1_; }
  const Mlp& target2() const { return target2_; }

  // Federation transport: actor, both critics, both critic targets (plus the
  // actor target when enabled). Temperature and optimizer moments stay local.
  WeightBundle export_bundle() const;
  void import_bundle(const WeightBundle& bundle);

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);

  bool all_finite() const;

 private:
  Eigen::MatrixXd states_matrix(const std::vector<Transition>& batch,
                                bool next) const;

  SacConfig config_;
  Mlp actor_, critic1_, critic2_, target1_, target2_;
  std::optional<Mlp> actor_target_;
  double log_alpha_;
  AdamState actor_opt_, critic1_opt_, critic2_opt_;
  ScalarAdam alpha_opt_;
};

struct SacStepInfo {
  bool updated = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
};

/// One tick of the local training loop: store the transition, then run the
/// critic / actor / temperature / target schedule once past warmup.
SacStepInfo sac_train_step(SacAgent& agent, ReplayBuffer& buffer,
                           const Transition& transition, long t, Rng& replay_rng);

}  // namespace fedgrid
