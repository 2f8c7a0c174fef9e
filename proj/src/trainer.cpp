#include "fedgrid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "fedgrid/federation.hpp"

namespace fedgrid {

namespace {

class SacPolicy : public TrainablePolicy {
 public:
  SacPolicy(const RunConfig& config, int house_id)
      : agent_(4, kNumActions, config.sac,
               derive_seed(config.seed, "agent-init", house_id)),
        buffer_(config.sac.replay_capacity) {}

  Action act(const Eigen::Vector4d& state, long t, Rng& rng, bool explore) override {
    if (explore && t < agent_.config().start_timesteps) {
      std::uniform_int_distribution<int> pick(0, kNumActions - 1);
      return static_cast<Action>(pick(rng));
    }
    return agent_.select_action(state, rng, explore);
  }

  LearnInfo learn(const Transition& tr, long t, Rng& replay_rng) override {
    const SacStepInfo info = sac_train_step(agent_, buffer_, tr, t, replay_rng);
    LearnInfo out;
    out.has_alpha = true;
    out.alpha = info.alpha;
    out.has_losses = info.updated;
    out.critic_loss = info.critic_loss;
    out.actor_loss = info.actor_loss;
    return out;
  }

  nlohmann::json checkpoint() const override { return agent_.checkpoint(); }
  void restore(const nlohmann::json& j) override { agent_.restore(j); }
  bool all_finite() const override { return agent_.all_finite(); }
  SacAgent* sac() override { return &agent_; }

 private:
  SacAgent agent_;
  ReplayBuffer buffer_;
};

class DqnPolicy : public TrainablePolicy {
 public:
  DqnPolicy(const RunConfig& config, int house_id)
      : agent_(4, kNumActions, config.dqn,
               derive_seed(config.seed, "agent-init", house_id)),
        buffer_(config.dqn.replay_capacity) {}

  Action act(const Eigen::Vector4d& state, long t, Rng& rng, bool explore) override {
    return agent_.select_action(state, rng, t, explore);
  }

  LearnInfo learn(const Transition& tr, long t, Rng& replay_rng) override {
    const DqnStepInfo info = dqn_train_step(agent_, buffer_, tr, t, replay_rng);
    LearnInfo out;
    out.has_losses = info.updated;
    out.critic_loss = info.loss;
    return out;
  }

  nlohmann::json checkpoint() const override { return agent_.checkpoint(); }
  void restore(const nlohmann::json& j) override { agent_.restore(j); }
  bool all_finite() const override { return agent_.all_finite(); }

 private:
  DqnAgent agent_;
  ReplayBuffer buffer_;
};

class RandomPolicy : public TrainablePolicy {
 public:
  Action act(const Eigen::Vector4d&, long, Rng& rng, bool) override {
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    return static_cast<Action>(pick(rng));
  }
  LearnInfo learn(const Transition&, long, Rng&) override { return {}; }
  nlohmann::json checkpoint() const override { return {{"kind", "random"}}; }
  void restore(const nlohmann::json&) override {}
  bool all_finite() const override { return true; }
};

class TabularPolicy : public TrainablePolicy {
 public:
  explicit TabularPolicy(const RunConfig& config)
      : cfg_(config.tabular),
        grid_{.bins_per_feature = config.tabular.bins_per_feature},
        q_(grid_.num_cells(), kNumActions) {}

  Action act(const Eigen::Vector4d& state, long, Rng& rng, bool explore) override {
    if (explore) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      if (unit(rng) < cfg_.epsilon) {
        std::uniform_int_distribution<int> pick(0, kNumActions - 1);
        return static_cast<Action>(pick(rng));
      }
    }
    return static_cast<Action>(q_.greedy(grid_.cell_of(state)));
  }

  LearnInfo learn(const Transition& tr, long, Rng&) override {
    tabular_q_update(q_, grid_.cell_of(tr.state), tr.action, tr.reward,
                     grid_.cell_of(tr.next_state), cfg_.alpha, cfg_.gamma);
    return {};
  }

  nlohmann::json checkpoint() const override {
    return {{"kind", "tabular"},
            {"bins_per_feature", grid_.bins_per_feature},
            {"table", q_.table()}};
  }

  void restore(const nlohmann::json& j) override {
    const auto table = j.at("table").get<std::vector<double>>();
    if (table.size() != q_.table().size()) {
      throw std::runtime_error("tabular checkpoint size mismatch");
    }
    for (int c = 0; c < q_.num_cells(); ++c) {
      for (int a = 0; a < kNumActions; ++a) {
        q_.set_q(c, a, table[static_cast<std::size_t>(c) * kNumActions + a]);
      }
    }
  }

  bool all_finite() const override {
    return std::all_of(q_.table().begin(), q_.table().end(),
                       [](double v) { return std::isfinite(v); });
  }

 private:
  TabularConfig cfg_;
  GridSpec grid_;
  TabularQ q_;
};

void check_record_finite(const MetricRecord& r) {
  const double fields[] = {r.reward,         r.grid_import_kwh, r.grid_export_kwh,
                           r.soc_kwh,        r.co2_kg,          r.cum_reward,
                           r.cum_import_kwh, r.cum_co2_kg,      r.alpha,
                           r.critic_loss,    r.actor_loss};
  for (double f : fields) {
    if (!std::isfinite(f)) {
      throw std::runtime_error("non-finite metric at house " +
                               std::to_string(r.house_id) + " t=" +
                               std::to_string(r.t));
    }
  }
}

}  // namespace

std::unique_ptr<TrainablePolicy> make_policy(const RunConfig& config, int house_id) {
  switch (config.agent) {
    case AgentKind::Sac: return std::make_unique<SacPolicy>(config, house_id);
    case AgentKind::Dqn: return std::make_unique<DqnPolicy>(config, house_id);
    case AgentKind::Random: return std::make_unique<RandomPolicy>();
    case AgentKind::Tabular: return std::make_unique<TabularPolicy>(config);
  }
  throw std::runtime_error("unknown agent kind");
}

HouseSeries house_series(const RunConfig& config, int house_id) {
  if (!config.dataset.files.empty()) {
    return load_series(config.dataset.files.at(house_id));
  }
  // Each house gets a distinct profile seed, so local models are trained on
  // genuinely heterogeneous data.
  return synthesize_series(config.dataset.days,
                           derive_seed(config.seed, "env-noise", house_id),
                           config.dataset.profile);
}

std::vector<int> train_day_cycle(const RunConfig& config, const HouseSeries& series) {
  const int days = series.days();
  int train_days = static_cast<int>(days * config.dataset.train_fraction);
  train_days = std::clamp(train_days, 1, days);
  std::vector<int> cycle(train_days);
  for (int d = 0; d < train_days; ++d) cycle[d] = d;
  return cycle;
}

std::vector<int> eval_day_cycle(const RunConfig& config, const HouseSeries& series) {
  const int days = series.days();
  int train_days = static_cast<int>(days * config.dataset.train_fraction);
  train_days = std::clamp(train_days, 1, days);
  std::vector<int> cycle;
  for (int d = train_days; d < days; ++d) cycle.push_back(d);
  if (cycle.empty()) cycle = train_day_cycle(config, series);
  return cycle;
}

std::vector<MetricRecord> run_house_loop(TrainablePolicy& policy, MicrogridEnv& env,
                                         const RunConfig& config, int house_id,
                                         const std::vector<int>& day_cycle,
                                         long timesteps, bool learn, bool explore,
                                         const SyncHook& hook) {
  if (day_cycle.empty()) throw std::runtime_error("empty day cycle");
  Rng action_rng(derive_seed(config.seed, "action-sampling", house_id));
  Rng replay_rng(derive_seed(config.seed, "replay-sampling", house_id));

  std::vector<MetricRecord> metrics;
  metrics.reserve(timesteps);

  long episode = 0;
  HouseState state = env.reset(day_cycle[0]);
  double cum_reward = 0.0;
  double cum_import = 0.0;

  for (long t = 0; t < timesteps; ++t) {
    const Action a = policy.act(state.normalized, t, action_rng, explore);
    auto [next_state, out] = env.step(a);

    Transition tr;
    tr.state = state.normalized;
    tr.action = static_cast<int>(a);
    tr.reward = out.reward;
    tr.next_state = next_state.normalized;
    tr.done = out.done;

    TrainablePolicy::LearnInfo info;
    if (learn) info = policy.learn(tr, t, replay_rng);

    cum_reward += out.reward;
    cum_import += out.grid_import_kwh;

    MetricRecord rec;
    rec.run_id = config.run_id;
    rec.house_id = house_id;
    rec.t = t;
    rec.episode = episode;
    rec.action = tr.action;
    rec.reward = out.reward;
    rec.grid_import_kwh = out.grid_import_kwh;
    rec.grid_export_kwh = out.grid_export_kwh;
    rec.soc_kwh = env.soc_kwh();
    rec.co2_kg = out.co2_kg;
    rec.cum_reward = cum_reward;
    rec.cum_import_kwh = cum_import;
    rec.cum_co2_kg = env.params().emission_factor * cum_import;
    rec.has_alpha = info.has_alpha;
    rec.alpha = info.alpha;
    rec.has_losses = info.has_losses;
    rec.critic_loss = info.critic_loss;
    rec.actor_loss = info.actor_loss;
    check_record_finite(rec);
    metrics.push_back(std::move(rec));

    if (out.done) {
      ++episode;
      if (hook && episode % config.federation.sync_every_episodes == 0) {
        hook(episode, policy);
      }
      if (t + 1 < timesteps) {
        state = env.reset(day_cycle[episode % day_cycle.size()]);
      }
    } else {
      state = next_state;
    }
  }

  if (!policy.all_finite()) {
    throw std::runtime_error("non-finite parameter in house " +
                             std::to_string(house_id));
  }
  return metrics;
}

namespace {

struct HouseOutcome {
  std::vector<MetricRecord> metrics;
  nlohmann::json checkpoint;
};

void write_artifacts(const RunConfig& config, RunArtifacts& artifacts,
                     std::vector<HouseOutcome> houses) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  for (int h = 0; h < static_cast<int>(houses.size()); ++h) {
    auto& m = houses[h].metrics;
    artifacts.metrics.insert(artifacts.metrics.end(), m.begin(), m.end());
    artifacts.checkpoints.push_back(houses[h].checkpoint);
    if (!houses[h].checkpoint.is_null()) {
      std::ofstream out(fs::path(config.out_dir) /
                        ("checkpoint_house" + std::to_string(h) + ".json"));
      out << houses[h].checkpoint.dump() << '\n';
    }
  }
  write_metrics_jsonl(artifacts.metrics,
                      (fs::path(config.out_dir) / "metrics.jsonl").string());
  artifacts.summary = summarize(artifacts.metrics, config.battery);
  nlohmann::json summary_json = artifacts.summary.to_json();
  summary_json["run_id"] = config.run_id;
  summary_json["mode"] = to_string(config.mode);
  summary_json["agent"] = to_string(config.agent);
  summary_json["houses"] = config.houses;
  std::ofstream out(fs::path(config.out_dir) / "summary.json");
  out << summary_json.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write summary.json");
}

RunArtifacts run_gen_data(const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  for (int h = 0; h < config.houses; ++h) {
    const HouseSeries series = house_series(config, h);
    save_series(series,
                (fs::path(config.out_dir) / ("house_" + std::to_string(h) + ".csv"))
                    .string());
  }
  return {};
}

RunArtifacts run_isolated(const RunConfig& config, bool learn) {
  RunArtifacts artifacts;
  std::vector<HouseOutcome> houses(config.houses);
  for (int h = 0; h < config.houses; ++h) {
    const HouseSeries series = house_series(config, h);
    const auto cycle = learn ? train_day_cycle(config, series)
                             : eval_day_cycle(config, series);
    HouseSeries norm_slice = series;
    norm_slice.rows.resize(static_cast<std::size_t>(train_day_cycle(config, series).size()) *
                           kStepsPerDay);
    MicrogridEnv env(&series, config.battery,
                     fit_normalization(norm_slice, config.battery), config.env);
    auto policy = make_policy(config, h);
    if (!learn) {
      std::ifstream in(std::filesystem::path(config.out_dir) /
                       ("checkpoint_house" + std::to_string(h) + ".json"));
      if (!in) {
        throw std::runtime_error("eval: missing checkpoint for house " +
                                 std::to_string(h) + " in " + config.out_dir);
      }
      nlohmann::json j;
      in >> j;
      policy->restore(j);
    }
    houses[h].metrics = run_house_loop(*policy, env, config, h, cycle,
                                       config.timesteps, learn, learn);
    houses[h].checkpoint = policy->checkpoint();
  }
  write_artifacts(config, artifacts, std::move(houses));
  return artifacts;
}

RunArtifacts run_federated(const RunConfig& config) {
  RunArtifacts artifacts;
  const int h_count = config.houses;
  FederationHub hub(h_count);

  std::vector<HouseSeries> series(h_count);
  std::vector<std::unique_ptr<TrainablePolicy>> policies(h_count);
  for (int h = 0; h < h_count; ++h) {
    series[h] = house_series(config, h);
    policies[h] = make_policy(config, h);
    hub.prime(h, policies[h]->sac()->export_bundle());
  }

  std::vector<HouseOutcome> houses(h_count);
  std::vector<std::exception_ptr> errors(h_count);
  std::vector<double> max_dev(h_count, 0.0);
  std::vector<std::thread> workers;
  workers.reserve(h_count);

  for (int h = 0; h < h_count; ++h) {
    workers.emplace_back([&, h] {
      try {
        SyncHook hook = [&, h](long, TrainablePolicy& policy) {
          SacAgent* agent = policy.sac();
          const WeightBundle global = hub.exchange(h, agent->export_bundle());
          agent->import_bundle(global);
          // Broadcast correctness probe: freshly loaded weights must match
          // the global model exactly.
          const WeightBundle loaded = agent->export_bundle();
          for (std::size_t p = 0; p < global.parts.size(); ++p) {
            for (std::size_t t = 0; t < global.parts[p].tensors.size(); ++t) {
              const auto& a = loaded.parts[p].tensors[t].values;
              const auto& b = global.parts[p].tensors[t].values;
              for (std::size_t i = 0; i < a.size(); ++i) {
                max_dev[h] = std::max(max_dev[h], std::abs(a[i] - b[i]));
              }
            }
          }
        };
        const auto cycle = train_day_cycle(config, series[h]);
        HouseSeries norm_slice = series[h];
        norm_slice.rows.resize(cycle.size() * static_cast<std::size_t>(kStepsPerDay));
        MicrogridEnv env(&series[h], config.battery,
                         fit_normalization(norm_slice, config.battery), config.env);
        houses[h].metrics = run_house_loop(*policies[h], env, config, h, cycle,
                                           config.timesteps, true, true, hook);
        houses[h].checkpoint = policies[h]->checkpoint();
      } catch (...) {
        errors[h] = std::current_exception();
        // Leave the barrier so the surviving houses cannot deadlock.
        hub.abandon();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (int h = 0; h < h_count; ++h) {
    if (errors[h]) {
      try {
        std::rethrow_exception(errors[h]);
      } catch (const std::exception& e) {
        throw std::runtime_error("federated round aborted: house " +
                                 std::to_string(h) + ": " + e.what());
      }
    }
  }

  artifacts.fed_rounds = hub.rounds_completed();
  artifacts.fed_transport_events = hub.transport_events();
  artifacts.fed_post_sync_max_deviation =
      *std::max_element(max_dev.begin(), max_dev.end());
  write_artifacts(config, artifacts, std::move(houses));
  return artifacts;
}

}  // namespace

RunArtifacts run(const RunConfig& config) {
  switch (config.mode) {
    case RunMode::GenData: return run_gen_data(config);
    case RunMode::Train: return run_isolated(config, true);
    case RunMode::Eval: return run_isolated(config, false);
    case RunMode::TrainFed: return run_federated(config);
  }
  throw std::runtime_error("unknown run mode");
}

}  // namespace fedgrid
