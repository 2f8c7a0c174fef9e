#include "fedgrid/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedgrid {

double compute_reward(double nu_kwh, double e_kwh, double eps, double reward_max) {
  const double r = nu_kwh / (e_kwh + eps);
  return std::clamp(r, 0.0, reward_max);
}

double co2_for_import(double import_kwh, double emission_factor) {
  return import_kwh * emission_factor;
}

MicrogridEnv::MicrogridEnv(const HouseSeries* series, BatterySpec battery,
                           NormalizationSpec norm, EnvParams params)
    : series_(series), battery_(battery), norm_(norm), params_(params) {
  if (series_ == nullptr || series_->days() < 1) {
    throw std::runtime_error("environment needs at least one full day of data");
  }
}

HouseState MicrogridEnv::observe() const {
  const SeriesRow& row = series_->rows[day_start_row_ + step_in_day_];
  HouseState s;
  s.pv_kwh = row.pv_kwh;
  s.soc_kwh = battery_state_.soc_kwh;
  s.temperature_c = row.temperature_c;
  s.consumption_kwh = row.consumption_kwh;
  s.normalized = norm_.normalize(s.pv_kwh, s.soc_kwh, s.temperature_c,
                                 s.consumption_kwh);
  return s;
}

HouseState MicrogridEnv::reset(int episode_index) {
  if (episode_index < 0 || episode_index >= series_->days()) {
    throw std::runtime_error("episode index " + std::to_string(episode_index) +
                             " out of range (series has " +
                             std::to_string(series_->days()) + " days)");
  }
  day_start_row_ = episode_index * kStepsPerDay;
  step_in_day_ = 0;
  done_ = false;
  battery_state_.soc_kwh = std::max(params_.initial_soc_fraction, battery_.floor_fraction) *
                           battery_.capacity_kwh;
  return observe();
}

std::pair<HouseState, StepOutcome> MicrogridEnv::step(Action action) {
  if (done_) throw std::runtime_error("step() called on a finished episode");

  const SeriesRow& row = series_->rows[day_start_row_ + step_in_day_];
  const double pv = row.pv_kwh;
  const double cons = row.consumption_kwh;
  const double net = pv - cons;

  StepOutcome out;
  double& soc = battery_state_.soc_kwh;

  switch (action) {
    case Action::Trade:
      if (net > 0.0) {
        out.grid_export_kwh = net;
      } else {
        out.grid_import_kwh = -net;
      }
      break;
    case Action::Charge:
      if (net > 0.0) {
        const double headroom = battery_.capacity_kwh - soc;
        const double drawn =
            std::min({net, battery_.max_charge_kwh_per_step,
                      headroom / battery_.charge_efficiency});
        out.battery_charge_kwh = drawn;
        soc = std::min(battery_.capacity_kwh, soc + drawn * battery_.charge_efficiency);
        out.grid_export_kwh = net - drawn;
      } else {
        out.grid_import_kwh = -net;
      }
      break;
    case Action::Discharge:
      if (net < 0.0) {
        const double deficit = -net;
        const double available =
            (soc - battery_.floor_kwh()) * battery_.discharge_efficiency;
        const double delivered =
            std::min({deficit, battery_.max_discharge_kwh_per_step,
                      std::max(0.0, available)});
        out.battery_discharge_kwh = delivered;
        soc = std::max(battery_.floor_kwh(),
                       soc - delivered / battery_.discharge_efficiency);
        out.grid_import_kwh = deficit - delivered;
      } else {
        out.grid_export_kwh = net;
      }
      break;
  }

  out.locally_served_kwh = std::min(pv, cons) + out.battery_discharge_kwh;
  out.reward = compute_reward(out.locally_served_kwh, out.grid_import_kwh,
                              params_.reward_epsilon, params_.reward_max);
  out.co2_kg = co2_for_import(out.grid_import_kwh, params_.emission_factor);

  ++step_in_day_;
  out.done = step_in_day_ >= kStepsPerDay;
  done_ = out.done;
  if (done_) step_in_day_ = kStepsPerDay - 1;  // keep observe() in range

  return {observe(), out};
}

}  // namespace fedgrid
