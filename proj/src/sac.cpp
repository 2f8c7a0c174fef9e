#include "fedgrid/sac.hpp"

#include <cmath>
#include <stdexcept>

namespace fedgrid {

namespace {

std::vector<int> full_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

bool net_finite(const Mlp& net) {
  for (const auto& m : net.w) {
    if (!m.allFinite()) return false;
  }
  for (const auto& v : net.b) {
    if (!v.allFinite()) return false;
  }
  return true;
}

}  // namespace

SacAgent::SacAgent(int state_dim, int num_actions, SacConfig config,
                   std::uint64_t init_seed)
    : config_(std::move(config)),
      log_alpha_(std::log(config_.init_alpha)),
      alpha_opt_{.learning_rate = config_.alpha_lr} {
  const auto actor_sizes = full_sizes(state_dim, config_.hidden, num_actions);
  const auto critic_sizes = full_sizes(state_dim, config_.hidden, num_actions);
  Rng actor_rng(derive_seed(init_seed, "actor"));
  Rng c1_rng(derive_seed(init_seed, "critic", 1));
  Rng c2_rng(derive_seed(init_seed, "critic", 2));
  actor_ = Mlp::make(actor_sizes, actor_rng);
  critic1_ = Mlp::make(critic_sizes, c1_rng);
  critic2_ = Mlp::make(critic_sizes, c2_rng);
  target1_ = critic1_;
  target2_ = critic2_;
  if (config_.use_actor_target) actor_target_ = actor_;
  actor_opt_ = AdamState::for_net(actor_, config_.actor_lr);
  critic1_opt_ = AdamState::for_net(critic1_, config_.critic_lr);
  critic2_opt_ = AdamState::for_net(critic2_, config_.critic_lr);
}

Action SacAgent::select_action(const Eigen::Vector4d& state, Rng& rng,
                               bool explore) const {
  const SoftmaxResult sm = softmax_logits(actor_.forward(state));
  if (!explore) {
    int best = 0;
    for (int a = 1; a < sm.probs.size(); ++a) {
      if (sm.probs(a) > sm.probs(best)) best = a;
    }
    return static_cast<Action>(best);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (int a = 0; a < sm.probs.size(); ++a) {
    acc += sm.probs(a);
    if (u < acc) return static_cast<Action>(a);
  }
  return static_cast<Action>(sm.probs.size() - 1);
}

Eigen::MatrixXd SacAgent::states_matrix(const std::vector<Transition>& batch,
                                        bool next) const {
  Eigen::MatrixXd s(batch.size(), 4);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    s.row(i) = (next ? batch[i].next_state : batch[i].state).transpose();
  }
  return s;
}

double SacAgent::critic_target(double reward, const Eigen::Vector4d& next_state,
                               bool done) const {
  std::vector<Transition> one(1);
  one[0].reward = reward;
  one[0].next_state = next_state;
  one[0].done = done;
  return critic_targets_batch(one)(0);
}

Eigen::VectorXd SacAgent::critic_targets_batch(
    const std::vector<Transition>& batch) const {
  const Eigen::MatrixXd next = states_matrix(batch, true);
  const SoftmaxBatch pi = softmax_logits_batch(actor_.forward_batch(next));
  const Eigen::MatrixXd q1 = target1_.forward_batch(next);
  const Eigen::MatrixXd q2 = target2_.forward_batch(next);
  const Eigen::MatrixXd qmin = q1.cwiseMin(q2);
  const double a = alpha();

  // Exact expectation over the categorical policy at s'.
  const Eigen::VectorXd expected_q =
      (pi.probs.array() * qmin.array()).rowwise().sum().matrix();
  const Eigen::VectorXd expected_logp =
      (pi.probs.array() * pi.log_probs.array()).rowwise().sum().matrix();

  Eigen::VectorXd y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double live = batch[i].done ? 0.0 : 1.0;
    double boot;
    if (config_.entropy_in_bootstrap) {
      boot = config_.gamma * (expected_q(i) - a * expected_logp(i));
    } else {
      boot = config_.gamma * expected_q(i) - a * expected_logp(i);
    }
    y(i) = batch[i].reward + live * boot;
  }
  return y;
}

std::pair<double, double> SacAgent::critic_update(
    const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::runtime_error("critic_update: empty batch");
  const Eigen::VectorXd y = critic_targets_batch(batch);
  const Eigen::MatrixXd s = states_matrix(batch, false);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  auto update_one = [&](Mlp& critic, AdamState& opt) {
    const Eigen::MatrixXd q = critic.forward_batch(s);
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double err = q(i, batch[i].action) - y(i);
      loss += err * err;
      dq(i, batch[i].action) = 2.0 * err * inv_b;
    }
    loss *= inv_b;
    opt.step(critic, backward_batch(critic, s, dq));
    return loss;
  };

  const double loss1 = update_one(critic1_, critic1_opt_);
  const double loss2 = update_one(critic2_, critic2_opt_);
  return {loss1, loss2};
}

MlpGrads SacAgent::actor_gradients(const std::vector<Transition>& batch) const {
  const Eigen::MatrixXd s = states_matrix(batch, false);
  const SoftmaxBatch pi = softmax_logits_batch(actor_.forward_batch(s));
  const Eigen::MatrixXd qmin =
      critic1_.forward_batch(s).cwiseMin(critic2_.forward_batch(s));
  const double a = alpha();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  // J = E_s[ sum_a pi(a|s) (alpha log pi(a|s) - Qmin(s,a)) ]
  // dJ/dlogit_k = pi_k (g_k - sum_a pi_a g_a) with g = alpha log pi - Qmin.
  const Eigen::MatrixXd g = a * pi.log_probs - qmin;
  const Eigen::VectorXd mean_g =
      (pi.probs.array() * g.array()).rowwise().sum().matrix();
  const Eigen::MatrixXd dlogits =
      ((pi.probs.array() * (g.array().colwise() - mean_g.array())) * inv_b)
          .matrix();
  return backward_batch(actor_, s, dlogits);
}

double SacAgent::actor_objective(const std::vector<Transition>& batch) const {
  const Eigen::MatrixXd s = states_matrix(batch, false);
  const SoftmaxBatch pi = softmax_logits_batch(actor_.forward_batch(s));
  const Eigen::MatrixXd qmin =
      critic1_.forward_batch(s).cwiseMin(critic2_.forward_batch(s));
  const Eigen::MatrixXd g = alpha() * pi.log_probs - qmin;
  return (pi.probs.array() * g.array()).rowwise().sum().mean();
}

double SacAgent::actor_update(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::runtime_error("actor_update: empty batch");
  const double loss = actor_objective(batch);
  actor_opt_.step(actor_, actor_gradients(batch));
  return loss;
}

double SacAgent::temperature_update(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::runtime_error("temperature_update: empty batch");
  const Eigen::MatrixXd s = states_matrix(batch, false);
  const SoftmaxBatch pi = softmax_logits_batch(actor_.forward_batch(s));
  const double entropy =
      -(pi.probs.array() * pi.log_probs.array()).rowwise().sum().mean();
  // J(alpha) = E[-alpha log pi - alpha H_target] = alpha (H - H_target);
  // in log space dJ/dlog_alpha = alpha (H - H_target).
  const double grad = alpha() * (entropy - config_.target_entropy);
  alpha_opt_.step(log_alpha_, grad);
  return alpha();
}

void SacAgent::polyak_update(double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::runtime_error("polyak tau out of [0,1]");
  auto blend = [tau](const Mlp& online, Mlp& target) {
    for (std::size_t l = 0; l < online.w.size(); ++l) {
      target.w[l] = tau * online.w[l] + (1.0 - tau) * target.w[l];
      target.b[l] = tau * online.b[l] + (1.0 - tau) * target.b[l];
    }
  };
  blend(critic1_, target1_);
  blend(critic2_, target2_);
  if (actor_target_) blend(actor_, *actor_target_);
}

WeightBundle SacAgent::export_bundle() const {
  WeightBundle b;
  b.parts.push_back(extract_weights(actor_));
  b.parts.push_back(extract_weights(critic1_));
  b.parts.push_back(extract_weights(critic2_));
  b.parts.push_back(extract_weights(target1_));
  b.parts.push_back(extract_weights(target2_));
  if (actor_target_) b.parts.push_back(extract_weights(*actor_target_));
  return b;
}

void SacAgent::import_bundle(const WeightBundle& bundle) {
  const std::size_t expected = actor_target_ ? 6 : 5;
  if (bundle.parts.size() != expected) {
    throw std::runtime_error("import_bundle: expected " + std::to_string(expected) +
                             " parts, got " + std::to_string(bundle.parts.size()));
  }
  load_weights(actor_, bundle.parts[0]);
  load_weights(critic1_, bundle.parts[1]);
  load_weights(critic2_, bundle.parts[2]);
  load_weights(target1_, bundle.parts[3]);
  load_weights(target2_, bundle.parts[4]);
  if (actor_target_) load_weights(*actor_target_, bundle.parts[5]);
}

nlohmann::json SacAgent::checkpoint() const {
  return {{"kind", "sac"},
          {"bundle", export_bundle().to_json()},
          {"log_alpha", log_alpha_},
          {"adam_steps",
           {{"actor", actor_opt_.step_count},
            {"critic1", critic1_opt_.step_count},
            {"critic2", critic2_opt_.step_count},
            {"alpha", alpha_opt_.step_count}}}};
}

void SacAgent::restore(const nlohmann::json& j) {
  import_bundle(WeightBundle::from_json(j.at("bundle")));
  log_alpha_ = j.at("log_alpha").get<double>();
  const auto& steps = j.at("adam_steps");
  actor_opt_.step_count = steps.at("actor").get<long>();
  critic1_opt_.step_count = steps.at("critic1").get<long>();
  critic2_opt_.step_count = steps.at("critic2").get<long>();
  alpha_opt_.step_count = steps.at("alpha").get<long>();
}

bool SacAgent::all_finite() const {
  return net_finite(actor_) && net_finite(critic1_) && net_finite(critic2_) &&
         net_finite(target1_) && net_finite(target2_) && std::isfinite(log_alpha_);
}

SacStepInfo sac_train_step(SacAgent& agent, ReplayBuffer& buffer,
                           const Transition& transition, long t, Rng& replay_rng) {
  buffer.push(transition);
  SacStepInfo info;
  info.alpha = agent.alpha();
  const SacConfig& cfg = agent.config();
  if (t < cfg.start_timesteps ||
      buffer.size() < static_cast<std::size_t>(cfg.batch_size)) {
    return info;
  }
  const auto batch = buffer.sample(cfg.batch_size, replay_rng);
  const auto [l1, l2] = agent.critic_update(batch);
  info.updated = true;
  info.critic_loss = 0.5 * (l1 + l2);
  if (t % cfg.freq == 0) {
    info.actor_loss = agent.actor_update(batch);
    info.alpha = agent.temperature_update(batch);
    agent.polyak_update(cfg.tau);
  }
  return info;
}

}  // namespace fedgrid
