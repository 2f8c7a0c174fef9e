#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedgrid/env.hpp"
#include "fedgrid/rng.hpp"

using namespace fedgrid;

namespace {

// One-day series with every row set to the same (pv, cons) pair, so a single
// step() outcome is fully hand-checkable.
HouseSeries flat_series(double pv, double cons, int days = 1) {
  HouseSeries s;
  for (int i = 0; i < days * kStepsPerDay; ++i) {
    s.rows.push_back({1468540800 + i * 300, 15.0, cons, pv});
  }
  return s;
}

NormalizationSpec unit_norm() {
  NormalizationSpec spec;
  spec.pv = {0.0, 1.0};
  spec.soc = {0.0, 8.0};
  spec.temperature = {0.0, 30.0};
  spec.consumption = {0.0, 1.0};
  return spec;
}

MicrogridEnv make_env(const HouseSeries& s, EnvParams params = {}) {
  return MicrogridEnv(&s, BatterySpec{}, unit_norm(), params);
}

}  // namespace

TEST_CASE("compute_reward: hand values and clamping") {
  CHECK(compute_reward(0.0, 0.2) == 0.0);
  CHECK(compute_reward(0.05, 0.0) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(compute_reward(1.0, 1.0) == doctest::Approx(1.0 / 1.001).epsilon(1e-12));
  CHECK(compute_reward(5.0, 0.0) == 100.0);
  CHECK(compute_reward(-1.0, 0.1) == 0.0);
}

TEST_CASE("co2 is proportional to import") {
  CHECK(co2_for_import(0.0, 0.475) == 0.0);
  CHECK(co2_for_import(0.2, 0.475) == doctest::Approx(0.095).epsilon(1e-12));
  CHECK(co2_for_import(1.0, 0.475) == doctest::Approx(0.475).epsilon(1e-12));
}

TEST_CASE("reset: initial state of charge and observation") {
  const HouseSeries s = flat_series(0.1, 0.05);
  MicrogridEnv env = make_env(s);
  const HouseState st = env.reset(0);
  CHECK(st.soc_kwh == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(st.pv_kwh == 0.1);
  CHECK(st.consumption_kwh == 0.05);
  CHECK(st.normalized(0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(st.normalized(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(st.normalized(2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(env.done());
}

TEST_CASE("reset rejects out-of-range episodes") {
  const HouseSeries s = flat_series(0.0, 0.05, 2);
  MicrogridEnv env = make_env(s);
  CHECK_THROWS(env.reset(-1));
  CHECK_THROWS(env.reset(2));
  CHECK_NOTHROW(env.reset(1));
}

TEST_CASE("trade with deficit imports the shortfall") {
  const HouseSeries s = flat_series(0.0, 0.2);
  MicrogridEnv env = make_env(s);
  env.reset(0);
  const double soc_before = env.soc_kwh();
  const auto [st, out] = env.step(Action::Trade);
  CHECK(out.grid_import_kwh == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.grid_export_kwh == 0.0);
  CHECK(out.battery_charge_kwh == 0.0);
  CHECK(out.battery_discharge_kwh == 0.0);
  CHECK(out.locally_served_kwh == 0.0);
  CHECK(out.reward == 0.0);
  CHECK(out.co2_kg == doctest::Approx(0.095).epsilon(1e-12));
  CHECK(st.soc_kwh == soc_before);  // bit-identical, battery untouched
}

TEST_CASE("trade with surplus exports the excess") {
  const HouseSeries s = flat_series(0.3, 0.1);
  MicrogridEnv env = make_env(s);
  env.reset(0);
  const auto [st, out] = env.step(Action::Trade);
  CHECK(out.grid_export_kwh == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.grid_import_kwh == 0.0);
  CHECK(out.locally_served_kwh == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(out.reward == 100.0);  // 0.1 / 1e-3 clamps at the cap
  CHECK(out.co2_kg == 0.0);
}

TEST_CASE("charge with surplus: rate-limited draw, remainder exported") {
  const HouseSeries s = flat_series(0.5, 0.1);
  MicrogridEnv env = make_env(s);
  env.reset(0);
  const auto [st, out] = env.step(Action::Charge);
  const double limit = BatterySpec{}.max_charge_kwh_per_step;  // 8/48
  CHECK(out.battery_charge_kwh == doctest::Approx(limit).epsilon(1e-12));
  CHECK(out.grid_export_kwh == doctest::Approx(0.4 - limit).epsilon(1e-12));
  CHECK(out.grid_import_kwh == 0.0);
  CHECK(st.soc_kwh == doctest::Approx(4.0 + limit * 0.95).epsilon(1e-12));
}

TEST_CASE("charge with deficit falls back to importing") {
  const HouseSeries s = flat_series(0.0, 0.2);
  MicrogridEnv env = make_env(s);
  env.reset(0);
  const auto [st, out] = env.step(Action::Charge);
  CHECK(out.battery_charge_kwh == 0.0);
  CHECK(out.grid_import_kwh == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(st.soc_kwh == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("charge at full capacity draws nothing") {
  const HouseSeries s = flat_series(0.5, 0.1);
  EnvParams params;
  params.initial_soc_fraction = 1.0;
  MicrogridEnv env = make_env(s, params);
  env.reset(0);
  const auto [st, out] = env.step(Action::Charge);
  CHECK(out.battery_charge_kwh == 0.0);
  CHECK(out.grid_export_kwh == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(st.soc_kwh == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("discharge with deficit: losses charged to the battery side") {
  const HouseSeries s = flat_series(0.0, 0.1);
  MicrogridEnv env = make_env(s);
  env.reset(0);
  const auto [st, out] = env.step(Action::Discharge);
  CHECK(out.battery_discharge_kwh == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(out.grid_import_kwh == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.locally_served_kwh == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(st.soc_kwh == doctest::Approx(4.0 - 0.1 / 0.95).epsilon(1e-12));
  CHECK(out.co2_kg == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("discharge at the floor imports the whole deficit") {
  const HouseSeries s = flat_series(0.0, 0.2);
  EnvParams params;
  params.initial_soc_fraction = 0.05;  // clamped up to the 10% floor
  MicrogridEnv env = make_env(s, params);
  const HouseState st0 = env.reset(0);
  CHECK(st0.soc_kwh == doctest::Approx(0.8).epsilon(1e-12));
  const auto [st, out] = env.step(Action::Discharge);
  CHECK(out.battery_discharge_kwh == 0.0);
  CHECK(out.grid_import_kwh == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(st.soc_kwh == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("discharge with surplus degrades to exporting") {
  const HouseSeries s = flat_series(0.3, 0.1);
  MicrogridEnv env = make_env(s);
  env.reset(0);
  const auto [st, out] = env.step(Action::Discharge);
  CHECK(out.battery_discharge_kwh == 0.0);
  CHECK(out.grid_export_kwh == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(st.soc_kwh == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("episode runs exactly one day then refuses further steps") {
  const HouseSeries s = flat_series(0.0, 0.05, 2);
  MicrogridEnv env = make_env(s);
  env.reset(0);
  for (int i = 0; i < kStepsPerDay; ++i) {
    const auto [st, out] = env.step(Action::Trade);
    CHECK(out.done == (i == kStepsPerDay - 1));
  }
  CHECK(env.done());
  CHECK_THROWS(env.step(Action::Trade));
  // reset() rearms the environment.
  env.reset(1);
  CHECK_FALSE(env.done());
  CHECK_NOTHROW(env.step(Action::Trade));
}

TEST_CASE("random-policy invariants: energy balance, soc bounds") {
  const HouseSeries s = synthesize_series(3, 1234, SynthProfile{});
  BatterySpec battery;
  MicrogridEnv env(&s, battery, unit_norm(), EnvParams{});
  Rng rng(9);
  std::uniform_int_distribution<int> pick(0, kNumActions - 1);

  for (int day = 0; day < 3; ++day) {
    HouseState st = env.reset(day);
    for (int i = 0; i < kStepsPerDay; ++i) {
      const double soc_before = env.soc_kwh();
      const SeriesRow& row = s.rows[day * kStepsPerDay + i];
      const auto [next, out] = env.step(static_cast<Action>(pick(rng)));

      // kWh in == kWh out at the house bus.
      const double in = row.pv_kwh + out.grid_import_kwh + out.battery_discharge_kwh;
      const double consumed =
          row.consumption_kwh + out.grid_export_kwh + out.battery_charge_kwh;
      CHECK(std::abs(in - consumed) < 1e-9);

      CHECK(out.grid_import_kwh >= 0.0);
      CHECK(out.grid_export_kwh >= 0.0);
      CHECK(out.reward >= 0.0);
      CHECK(out.reward <= 100.0);
      CHECK(next.soc_kwh >= battery.floor_kwh() - 1e-12);
      CHECK(next.soc_kwh <= battery.capacity_kwh + 1e-12);
      CHECK(out.battery_charge_kwh <= battery.max_charge_kwh_per_step + 1e-12);
      CHECK(out.battery_discharge_kwh <= battery.max_discharge_kwh_per_step + 1e-12);
      // The battery only moves in the commanded direction.
      if (next.soc_kwh > soc_before) CHECK(out.battery_charge_kwh > 0.0);
      if (next.soc_kwh < soc_before) CHECK(out.battery_discharge_kwh > 0.0);
      st = next;
    }
  }
}
