#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "fedgrid/dqn.hpp"
#include "fedgrid/env.hpp"
#include "fedgrid/federation.hpp"
#include "fedgrid/sac.hpp"

namespace fedgrid {

enum class RunMode { GenData, Train, TrainFed, Eval };
enum class AgentKind { Sac, Dqn, Random, Tabular };

std::string to_string(RunMode mode);
std::string to_string(AgentKind kind);
RunMode run_mode_from_string(const std::string& s);
AgentKind agent_kind_from_string(const std::string& s);

struct DatasetConfig {
  int days = 7;
  SynthProfile profile;
  double train_fraction = 0.8;
  // When non-empty, per-house CSV files are loaded instead of synthesizing.
  std::vector<std::string> files;
};

struct TabularConfig {
  int bins_per_feature = 3;
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon = 0.1;
};

struct RunConfig {
  RunMode mode = RunMode::Train;
  AgentKind agent = AgentKind::Sac;
  std::uint64_t seed = 0;
  int houses = 1;
  long timesteps = 75000;
  std::string out_dir = "out";
  std::string run_id = "run";

  DatasetConfig dataset;
  BatterySpec battery;
  EnvParams env;
  SacConfig sac;
  DqnConfig dqn;
  TabularConfig tabular;
  FederationSchedule federation;
};

/// Parse a config document. Every key has a default; unknown keys are
/// rejected anywhere in the tree.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace fedgrid
