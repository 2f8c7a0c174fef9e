#pragma once

#include <Eigen/Dense>
#include <utility>

#include "fedgrid/dataset.hpp"

namespace fedgrid {

struct BatterySpec {
  double capacity_kwh = 8.0;
  double charge_efficiency = 0.95;
  double discharge_efficiency = 0.95;
  double floor_fraction = 0.10;
  double max_charge_kwh_per_step = 8.0 / 48.0;
  double max_discharge_kwh_per_step = 8.0 / 48.0;

  double floor_kwh() const { return floor_fraction * capacity_kwh; }
};

struct BatteryState {
  double soc_kwh = 0.0;
};

enum class Action : int { Trade = 0, Charge = 1, Discharge = 2 };
inline constexpr int kNumActions = 3;

struct HouseState {
  double pv_kwh = 0.0;
  double soc_kwh = 0.0;
  double temperature_c = 0.0;
  double consumption_kwh = 0.0;
  Eigen::Vector4d normalized = Eigen::Vector4d::Zero();
};

/// Energy ledger of one 5-minute interval.
struct StepOutcome {
  double grid_import_kwh = 0.0;
  double grid_export_kwh = 0.0;
  double battery_charge_kwh = 0.0;     // energy drawn from the house bus
  double battery_discharge_kwh = 0.0;  // energy delivered to the house bus
  double locally_served_kwh = 0.0;     // PV consumed on-site + battery delivery
  double reward = 0.0;
  double co2_kg = 0.0;
  bool done = false;
};

struct EnvParams {
  double initial_soc_fraction = 0.5;
  double emission_factor = 0.475;  // kg CO2 per imported kWh
  double reward_epsilon = 1e-3;
  double reward_max = 100.0;
};

double compute_reward(double nu_kwh, double e_kwh, double eps = 1e-3,
                      double reward_max = 100.0);
double co2_for_import(double import_kwh, double emission_factor);

/// Single-house, time-slotted dispatch environment. One episode is one
/// calendar day (288 intervals). The series outlives the environment.
class MicrogridEnv {
 public:
  MicrogridEnv(const HouseSeries* series, BatterySpec battery,
               NormalizationSpec norm, EnvParams params);

  HouseState reset(int episode_index);
  std::pair<HouseState, StepOutcome> step(Action action);

  bool done() const { return done_; }
  const BatterySpec& battery() const { return battery_; }
  const NormalizationSpec& norm() const { return norm_; }
  const EnvParams& params() const { return params_; }
  double soc_kwh() const { return battery_state_.soc_kwh; }

 private:
  HouseState observe() const;

  const HouseSeries* series_;
  BatterySpec battery_;
  NormalizationSpec norm_;
  EnvParams params_;
  BatteryState battery_state_;
  int day_start_row_ = 0;
  int step_in_day_ = 0;
  bool done_ = true;
};

}  // namespace fedgrid
