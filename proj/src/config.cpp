#include "fedgrid/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace fedgrid {

namespace {

// Pull known keys out of an object and reject whatever is left over.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw std::runtime_error("config: " + path_ + " must be an object");
    }
    for (auto it = j_.begin(); it != j_.end(); ++it) unseen_.insert(it.key());
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (auto it = j_.find(key); it != j_.end()) {
      unseen_.erase(key);
      try {
        out = it->get<T>();
      } catch (const std::exception& e) {
        throw std::runtime_error("config: bad value for " + path_ + key + ": " +
                                 e.what());
      }
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const nlohmann::json& child(const char* key) {
    unseen_.erase(key);
    return j_.at(key);
  }

  void finish() const {
    if (!unseen_.empty()) {
      throw std::runtime_error("config: unknown key " + path_ + *unseen_.begin());
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> unseen_;
};

SynthProfile parse_profile(const nlohmann::json& j) {
  SynthProfile p;
  ObjectReader r(j, "dataset.profile.");
  r.get("pv_peak_kwh", p.pv_peak_kwh);
  r.get("base_load_kwh", p.base_load_kwh);
  r.get("morning_peak_kwh", p.morning_peak_kwh);
  r.get("evening_peak_kwh", p.evening_peak_kwh);
  r.get("temp_mean_c", p.temp_mean_c);
  r.get("temp_amplitude_c", p.temp_amplitude_c);
  r.get("noise_sigma", p.noise_sigma);
  r.get("start_epoch", p.start_epoch);
  r.finish();
  return p;
}

DatasetConfig parse_dataset(const nlohmann::json& j) {
  DatasetConfig d;
  ObjectReader r(j, "dataset.");
  r.get("days", d.days);
  r.get("train_fraction", d.train_fraction);
  r.get("files", d.files);
  if (r.has("profile")) d.profile = parse_profile(r.child("profile"));
  r.finish();
  return d;
}

BatterySpec parse_battery(const nlohmann::json& j) {
  BatterySpec b;
  ObjectReader r(j, "battery.");
  bool explicit_flows = r.has("max_charge_kwh_per_step") ||
                        r.has("max_discharge_kwh_per_step");
  r.get("capacity_kwh", b.capacity_kwh);
  r.get("charge_efficiency", b.charge_efficiency);
  r.get("discharge_efficiency", b.discharge_efficiency);
  r.get("floor_fraction", b.floor_fraction);
  if (!explicit_flows) {
    // capacity/4 per hour, scaled to the 5-minute step
    b.max_charge_kwh_per_step = b.capacity_kwh / 4.0 * (kStepMinutes / 60.0);
    b.max_discharge_kwh_per_step = b.max_charge_kwh_per_step;
  }
  r.get("max_charge_kwh_per_step", b.max_charge_kwh_per_step);
  r.get("max_discharge_kwh_per_step", b.max_discharge_kwh_per_step);
  r.finish();
  if (b.capacity_kwh <= 0.0 || b.floor_fraction < 0.0 || b.floor_fraction >= 1.0 ||
      b.charge_efficiency <= 0.0 || b.charge_efficiency > 1.0 ||
      b.discharge_efficiency <= 0.0 || b.discharge_efficiency > 1.0 ||
      b.max_charge_kwh_per_step <= 0.0 || b.max_discharge_kwh_per_step <= 0.0) {
    throw std::runtime_error("config: invalid battery spec");
  }
  return b;
}

EnvParams parse_env(const nlohmann::json& j) {
  EnvParams e;
  ObjectReader r(j, "env.");
  r.get("initial_soc_fraction", e.initial_soc_fraction);
  r.get("emission_factor", e.emission_factor);
  r.get("reward_epsilon", e.reward_epsilon);
  r.get("reward_max", e.reward_max);
  r.finish();
  return e;
}

SacConfig parse_sac(const nlohmann::json& j) {
  SacConfig s;
  ObjectReader r(j, "sac.");
  r.get("gamma", s.gamma);
  r.get("tau", s.tau);
  r.get("freq", s.freq);
  r.get("actor_lr", s.actor_lr);
  r.get("critic_lr", s.critic_lr);
  r.get("alpha_lr", s.alpha_lr);
  r.get("hidden", s.hidden);
  r.get("target_entropy", s.target_entropy);
  r.get("init_alpha", s.init_alpha);
  r.get("entropy_in_bootstrap", s.entropy_in_bootstrap);
  r.get("use_actor_target", s.use_actor_target);
  r.get("start_timesteps", s.start_timesteps);
  r.get("batch_size", s.batch_size);
  r.get("replay_capacity", s.replay_capacity);
  r.finish();
  return s;
}

DqnConfig parse_dqn(const nlohmann::json& j) {
  DqnConfig d;
  ObjectReader r(j, "dqn.");
  r.get("gamma", d.gamma);
  r.get("lr", d.lr);
  r.get("epsilon_min", d.epsilon_min);
  r.get("epsilon_decay_steps", d.epsilon_decay_steps);
  r.get("target_update_steps", d.target_update_steps);
  r.get("hidden", d.hidden);
  r.get("start_timesteps", d.start_timesteps);
  r.get("batch_size", d.batch_size);
  r.get("replay_capacity", d.replay_capacity);
  r.finish();
  return d;
}

TabularConfig parse_tabular(const nlohmann::json& j) {
  TabularConfig t;
  ObjectReader r(j, "tabular.");
  r.get("bins_per_feature", t.bins_per_feature);
  r.get("alpha", t.alpha);
  r.get("gamma", t.gamma);
  r.get("epsilon", t.epsilon);
  r.finish();
  return t;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::GenData: return "gen-data";
    case RunMode::Train: return "train";
    case RunMode::TrainFed: return "train-fed";
    case RunMode::Eval: return "eval";
  }
  return "?";
}

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Sac: return "sac";
    case AgentKind::Dqn: return "dqn";
    case AgentKind::Random: return "random";
    case AgentKind::Tabular: return "tabular";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "gen-data") return RunMode::GenData;
  if (s == "train") return RunMode::Train;
  if (s == "train-fed") return RunMode::TrainFed;
  if (s == "eval") return RunMode::Eval;
  throw std::runtime_error("unknown mode: " + s);
}

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "sac") return AgentKind::Sac;
  if (s == "dqn") return AgentKind::Dqn;
  if (s == "random") return AgentKind::Random;
  if (s == "tabular") return AgentKind::Tabular;
  throw std::runtime_error("unknown agent kind: " + s);
}

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  ObjectReader r(j, "");
  std::string mode = to_string(c.mode), agent = to_string(c.agent);
  r.get("mode", mode);
  r.get("agent", agent);
  c.mode = run_mode_from_string(mode);
  c.agent = agent_kind_from_string(agent);
  r.get("seed", c.seed);
  r.get("houses", c.houses);
  r.get("timesteps", c.timesteps);
  r.get("out_dir", c.out_dir);
  r.get("run_id", c.run_id);
  if (r.has("dataset")) c.dataset = parse_dataset(r.child("dataset"));
  if (r.has("battery")) c.battery = parse_battery(r.child("battery"));
  if (r.has("env")) c.env = parse_env(r.child("env"));
  if (r.has("sac")) c.sac = parse_sac(r.child("sac"));
  if (r.has("dqn")) c.dqn = parse_dqn(r.child("dqn"));
  if (r.has("tabular")) c.tabular = parse_tabular(r.child("tabular"));
  if (r.has("federation")) {
    ObjectReader f(r.child("federation"), "federation.");
    f.get("sync_every_episodes", c.federation.sync_every_episodes);
    f.finish();
  }
  r.finish();
  if (c.houses < 1) throw std::runtime_error("config: houses must be >= 1");
  if (c.timesteps < 1) throw std::runtime_error("config: timesteps must be >= 1");
  if (c.federation.sync_every_episodes < 1) {
    throw std::runtime_error("config: federation.sync_every_episodes must be >= 1");
  }
  if (c.mode == RunMode::TrainFed && c.agent != AgentKind::Sac) {
    throw std::runtime_error("config: train-fed requires agent=sac");
  }
  if (!c.dataset.files.empty() &&
      c.dataset.files.size() != static_cast<std::size_t>(c.houses)) {
    throw std::runtime_error("config: dataset.files must list one file per house");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  in >> j;
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& c) {
  return {
      {"mode", to_string(c.mode)},
      {"agent", to_string(c.agent)},
      {"seed", c.seed},
      {"houses", c.houses},
      {"timesteps", c.timesteps},
      {"out_dir", c.out_dir},
      {"run_id", c.run_id},
      {"dataset",
       {{"days", c.dataset.days},
        {"train_fraction", c.dataset.train_fraction},
        {"files", c.dataset.files},
        {"profile",
         {{"pv_peak_kwh", c.dataset.profile.pv_peak_kwh},
          {"base_load_kwh", c.dataset.profile.base_load_kwh},
          {"morning_peak_kwh", c.dataset.profile.morning_peak_kwh},
          {"evening_peak_kwh", c.dataset.profile.evening_peak_kwh},
          {"temp_mean_c", c.dataset.profile.temp_mean_c},
          {"temp_amplitude_c", c.dataset.profile.temp_amplitude_c},
          {"noise_sigma", c.dataset.profile.noise_sigma},
          {"start_epoch", c.dataset.profile.start_epoch}}}}},
      {"battery",
       {{"capacity_kwh", c.battery.capacity_kwh},
        {"charge_efficiency", c.battery.charge_efficiency},
        {"discharge_efficiency", c.battery.discharge_efficiency},
        {"floor_fraction", c.battery.floor_fraction},
        {"max_charge_kwh_per_step", c.battery.max_charge_kwh_per_step},
        {"max_discharge_kwh_per_step", c.battery.max_discharge_kwh_per_step}}},
      {"env",
       {{"initial_soc_fraction", c.env.initial_soc_fraction},
        {"emission_factor", c.env.emission_factor},
        {"reward_epsilon", c.env.reward_epsilon},
        {"reward_max", c.env.reward_max}}},
      {"sac",
       {{"gamma", c.sac.gamma},
        {"tau", c.sac.tau},
        {"freq", c.sac.freq},
        {"actor_lr", c.sac.actor_lr},
        {"critic_lr", c.sac.critic_lr},
        {"alpha_lr", c.sac.alpha_lr},
        {"hidden", c.sac.hidden},
        {"target_entropy", c.sac.target_entropy},
        {"init_alpha", c.sac.init_alpha},
        {"entropy_in_bootstrap", c.sac.entropy_in_bootstrap},
        {"use_actor_target", c.sac.use_actor_target},
        {"start_timesteps", c.sac.start_timesteps},
        {"batch_size", c.sac.batch_size},
        {"replay_capacity", c.sac.replay_capacity}}},
      {"dqn",
       {{"gamma", c.dqn.gamma},
        {"lr", c.dqn.lr},
        {"epsilon_min", c.dqn.epsilon_min},
        {"epsilon_decay_steps", c.dqn.epsilon_decay_steps},
        {"target_update_steps", c.dqn.target_update_steps},
        {"hidden", c.dqn.hidden},
        {"start_timesteps", c.dqn.start_timesteps},
        {"batch_size", c.dqn.batch_size},
        {"replay_capacity", c.dqn.replay_capacity}}},
      {"tabular",
       {{"bins_per_feature", c.tabular.bins_per_feature},
        {"alpha", c.tabular.alpha},
        {"gamma", c.tabular.gamma},
        {"epsilon", c.tabular.epsilon}}},
      {"federation", {{"sync_every_episodes", c.federation.sync_every_episodes}}}};
}

}  // namespace fedgrid
