#include "fedgrid/metrics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace fedgrid {

nlohmann::json MetricRecord::to_json() const {
  nlohmann::json j = {{"run_id", run_id},
                      {"house_id", house_id},
                      {"t", t},
                      {"episode", episode},
                      {"action", action},
                      {"reward", reward},
                      {"grid_import_kwh", grid_import_kwh},
                      {"grid_export_kwh", grid_export_kwh},
                      {"soc_kwh", soc_kwh},
                      {"co2_kg", co2_kg},
                      {"cum_reward", cum_reward},
                      {"cum_import_kwh", cum_import_kwh},
                      {"cum_co2_kg", cum_co2_kg}};
  if (has_alpha) j["alpha"] = alpha;
  if (has_losses) {
    j["critic_loss"] = critic_loss;
    j["actor_loss"] = actor_loss;
  }
  return j;
}

MetricRecord MetricRecord::from_json(const nlohmann::json& j) {
  MetricRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.house_id = j.at("house_id").get<int>();
  r.t = j.at("t").get<long>();
  r.episode = j.at("episode").get<long>();
  r.action = j.at("action").get<int>();
  r.reward = j.at("reward").get<double>();
  r.grid_import_kwh = j.at("grid_import_kwh").get<double>();
  r.grid_export_kwh = j.at("grid_export_kwh").get<double>();
  r.soc_kwh = j.at("soc_kwh").get<double>();
  r.co2_kg = j.at("co2_kg").get<double>();
  r.cum_reward = j.at("cum_reward").get<double>();
  r.cum_import_kwh = j.at("cum_import_kwh").get<double>();
  r.cum_co2_kg = j.at("cum_co2_kg").get<double>();
  if (j.contains("alpha")) {
    r.has_alpha = true;
    r.alpha = j.at("alpha").get<double>();
  }
  if (j.contains("critic_loss")) {
    r.has_losses = true;
    r.critic_loss = j.at("critic_loss").get<double>();
    r.actor_loss = j.at("actor_loss").get<double>();
  }
  return r;
}

nlohmann::json RunSummary::to_json() const {
  return {{"total_reward", total_reward},
          {"total_co2_kg", total_co2_kg},
          {"total_import_kwh", total_import_kwh},
          {"total_export_kwh", total_export_kwh},
          {"steps", steps},
          {"episodes", episodes},
          {"full_charge_count", full_charge_count},
          {"floor_hit_count", floor_hit_count},
          {"mean_episode_reward_last_decile", mean_episode_reward_last_decile},
          {"mean_episode_co2_last_decile", mean_episode_co2_last_decile}};
}

RunSummary summarize(const std::vector<MetricRecord>& records,
                     const BatterySpec& battery) {
  if (records.empty()) throw std::runtime_error("summarize: empty metric stream");
  RunSummary s;
  // Per (house, episode) reward and co2 totals for the trailing-decile means.
  std::map<std::pair<int, long>, std::pair<double, double>> per_episode;
  long max_episode = 0;
  for (const MetricRecord& r : records) {
    s.total_reward += r.reward;
    s.total_co2_kg += r.co2_kg;
    s.total_import_kwh += r.grid_import_kwh;
    s.total_export_kwh += r.grid_export_kwh;
    ++s.steps;
    if (r.soc_kwh >= battery.capacity_kwh - 1e-9) ++s.full_charge_count;
    if (r.soc_kwh <= battery.floor_kwh() + 1e-9) ++s.floor_hit_count;
    auto& e = per_episode[{r.house_id, r.episode}];
    e.first += r.reward;
    e.second += r.co2_kg;
    max_episode = std::max(max_episode, r.episode);
  }
  s.episodes = max_episode + 1;
  const long decile = std::max<long>(1, (s.episodes + 9) / 10);
  const long cutoff = s.episodes - decile;
  double reward_sum = 0.0, co2_sum = 0.0;
  long n = 0;
  for (const auto& [key, totals] : per_episode) {
    if (key.second >= cutoff) {
      reward_sum += totals.first;
      co2_sum += totals.second;
      ++n;
    }
  }
  if (n > 0) {
    s.mean_episode_reward_last_decile = reward_sum / n;
    s.mean_episode_co2_last_decile = co2_sum / n;
  }
  return s;
}

void write_metrics_jsonl(const std::vector<MetricRecord>& records,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const MetricRecord& r : records) out << r.to_json().dump() << '\n';
  if (!out) throw std::runtime_error("write failure on " + path);
}

std::vector<MetricRecord> read_metrics_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<MetricRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(MetricRecord::from_json(nlohmann::json::parse(line)));
  }
  return records;
}

}  // namespace fedgrid
