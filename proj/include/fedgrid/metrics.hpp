#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "fedgrid/env.hpp"

namespace fedgrid {

/// One line of the metrics stream; one record per environment step.
struct MetricRecord {
  std::string run_id;
  int house_id = 0;
  long t = 0;
  long episode = 0;
  int action = 0;
  double reward = 0.0;
  double grid_import_kwh = 0.0;
  double grid_export_kwh = 0.0;
  double soc_kwh = 0.0;
  double co2_kg = 0.0;
  double cum_reward = 0.0;
  double cum_import_kwh = 0.0;
  double cum_co2_kg = 0.0;  // emission_factor * cum_import_kwh by definition
  bool has_alpha = false;
  double alpha = 0.0;
  bool has_losses = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;

  nlohmann::json to_json() const;
  static MetricRecord from_json(const nlohmann::json& j);
};

struct RunSummary {
  double total_reward = 0.0;
  double total_co2_kg = 0.0;
  double total_import_kwh = 0.0;
  double total_export_kwh = 0.0;
  long steps = 0;
  long episodes = 0;
  long full_charge_count = 0;
  long floor_hit_count = 0;
  double mean_episode_reward_last_decile = 0.0;
  double mean_episode_co2_last_decile = 0.0;

  nlohmann::json to_json() const;
};

/// Totals and counts over a complete stream. Battery bounds are needed to
/// classify full-charge and floor-hit steps.
RunSummary summarize(const std::vector<MetricRecord>& records,
                     const BatterySpec& battery);

void write_metrics_jsonl(const std::vector<MetricRecord>& records,
                         const std::string& path);
std::vector<MetricRecord> read_metrics_jsonl(const std::string& path);

}  // namespace fedgrid
