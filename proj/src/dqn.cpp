#include "fedgrid/dqn.hpp"

#include <algorithm>
#include <cmath>

namespace fedgrid {

namespace {

std::vector<int> full_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

DqnAgent::DqnAgent(int state_dim, int num_actions, DqnConfig config,
                   std::uint64_t init_seed)
    : config_(std::move(config)) {
  Rng rng(derive_seed(init_seed, "dqn"));
  q_net_ = Mlp::make(full_sizes(state_dim, config_.hidden, num_actions), rng);
  q_target_ = q_net_;
  opt_ = AdamState::for_net(q_net_, config_.lr);
}

double DqnAgent::epsilon(long t) const {
  if (t >= config_.epsilon_decay_steps) return config_.epsilon_min;
  const double frac = static_cast<double>(t) / static_cast<double>(config_.epsilon_decay_steps);
  return 1.0 - (1.0 - config_.epsilon_min) * frac;
}

Action DqnAgent::select_action(const Eigen::Vector4d& state, Rng& rng, long t,
                               bool explore) const {
  if (explore) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < epsilon(t)) {
      std::uniform_int_distribution<int> pick(0, kNumActions - 1);
      return static_cast<Action>(pick(rng));
    }
  }
  const Eigen::VectorXd q = q_net_.forward(state);
  int best = 0;
  for (int a = 1; a < q.size(); ++a) {
    if (q(a) > q(best)) best = a;
  }
  return static_cast<Action>(best);
}

double DqnAgent::update(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::runtime_error("dqn update: empty batch");
  const std::size_t n = batch.size();
  Eigen::MatrixXd s(n, 4), s2(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    s.row(i) = batch[i].state.transpose();
    s2.row(i) = batch[i].next_state.transpose();
  }
  const Eigen::MatrixXd q_next = q_target_.forward_batch(s2);
  const Eigen::MatrixXd q = q_net_.forward_batch(s);
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double live = batch[i].done ? 0.0 : 1.0;
    const double target =
        batch[i].reward + live * config_.gamma * q_next.row(i).maxCoeff();
    const double err = q(i, batch[i].action) - target;
    loss += err * err;
    dq(i, batch[i].action) = 2.0 * err * inv_n;
  }
  loss *= inv_n;
  opt_.step(q_net_, backward_batch(q_net_, s, dq));
  return loss;
}

nlohmann::json DqnAgent::checkpoint() const {
  return {{"kind", "dqn"},
          {"q_net", extract_weights(q_net_).to_json()},
          {"q_target", extract_weights(q_target_).to_json()},
          {"adam_steps", opt_.step_count}};
}

void DqnAgent::restore(const nlohmann::json& j) {
  load_weights(q_net_, ModelWeights::from_json(j.at("q_net")));
  load_weights(q_target_, ModelWeights::from_json(j.at("q_target")));
  opt_.step_count = j.at("adam_steps").get<long>();
}

bool DqnAgent::all_finite() const {
  for (const auto& m : q_net_.w) {
    if (!m.allFinite()) return false;
  }
  for (const auto& v : q_net_.b) {
    if (!v.allFinite()) return false;
  }
  return true;
}

DqnStepInfo dqn_train_step(DqnAgent& agent, ReplayBuffer& buffer,
                           const Transition& transition, long t, Rng& replay_rng) {
  buffer.push(transition);
  DqnStepInfo info;
  const DqnConfig& cfg = agent.config();
  if (t < cfg.start_timesteps ||
      buffer.size() < static_cast<std::size_t>(cfg.batch_size)) {
    return info;
  }
  info.loss = agent.update(buffer.sample(cfg.batch_size, replay_rng));
  info.updated = true;
  if (t % cfg.target_update_steps == 0) agent.sync_target();
  return info;
}

}  // namespace fedgrid
