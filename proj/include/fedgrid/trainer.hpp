#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fedgrid/config.hpp"
#include "fedgrid/dqn.hpp"
#include "fedgrid/metrics.hpp"
#include "fedgrid/sac.hpp"
#include "fedgrid/tabular.hpp"

namespace fedgrid {

/// Uniform front for the agent kinds the experiment loop can drive.
class TrainablePolicy {
 public:
  struct LearnInfo {
    bool has_alpha = false;
    double alpha = 0.0;
    bool has_losses = false;
    double critic_loss = 0.0;
    double actor_loss = 0.0;
  };

  virtual ~TrainablePolicy() = default;
  virtual Action act(const Eigen::Vector4d& state, long t, Rng& action_rng,
                     bool explore) = 0;
  virtual LearnInfo learn(const Transition& transition, long t, Rng& replay_rng) = 0;
  virtual nlohmann::json checkpoint() const = 0;
  virtual void restore(const nlohmann::json& j) = 0;
  virtual bool all_finite() const = 0;
  virtual SacAgent* sac() { return nullptr; }
};

std::unique_ptr<TrainablePolicy> make_policy(const RunConfig& config, int house_id);

using SyncHook = std::function<void(long episode, TrainablePolicy& policy)>;

/// Drive one house for `timesteps` steps, resetting through `day_cycle` at
/// episode boundaries. The hook fires after every federation episode.
std::vector<MetricRecord> run_house_loop(TrainablePolicy& policy, MicrogridEnv& env,
                                         const RunConfig& config, int house_id,
                                         const std::vector<int>& day_cycle,
                                         long timesteps, bool learn, bool explore,
                                         const SyncHook& hook = nullptr);

struct RunArtifacts {
  std::vector<MetricRecord> metrics;
  RunSummary summary;
  std::vector<nlohmann::json> checkpoints;  // per house, training modes only
  long fed_rounds = 0;
  long fed_transport_events = 0;
  // Max |local - global| observed right after any broadcast; 0 when correct.
  double fed_post_sync_max_deviation = 0.0;
};

HouseSeries house_series(const RunConfig& config, int house_id);
std::vector<int> train_day_cycle(const RunConfig& config, const HouseSeries& series);
std::vector<int> eval_day_cycle(const RunConfig& config, const HouseSeries& series);

/// Execute the configured mode end to end and write metrics.jsonl,
/// summary.json and per-house checkpoints under out_dir.
RunArtifacts run(const RunConfig& config);

}  // namespace fedgrid
