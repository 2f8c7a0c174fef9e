#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace fedgrid {

struct BatterySpec;  // env.hpp

inline constexpr int kStepMinutes = 5;
inline constexpr int kStepsPerDay = 24 * 60 / kStepMinutes;  // 288

/// One 5-minute measurement interval. Timestamps are UTC unix seconds.
struct SeriesRow {
  std::int64_t timestamp = 0;
  double temperature_c = 0.0;
  double consumption_kwh = 0.0;
  double pv_kwh = 0.0;
};

struct HouseSeries {
  std::vector<SeriesRow> rows;
  int step_minutes = kStepMinutes;
  std::string house_id;

  int days() const { return static_cast<int>(rows.size()) / kStepsPerDay; }
};

struct SynthProfile {
  double pv_peak_kwh = 0.13;       // per 5-min interval at solar noon
  double base_load_kwh = 0.03;     // flat consumption floor per interval
  double morning_peak_kwh = 0.10;  // extra load at the 07:30 bump
  double evening_peak_kwh = 0.14;  // extra load at the 19:30 bump
  double temp_mean_c = 15.0;
  double temp_amplitude_c = 8.0;
  double noise_sigma = 0.10;
  std::int64_t start_epoch = 1468540800;  // 2016-07-15T00:00:00Z
};

/// Per-feature min/max ranges for affine [0,1] scaling. Degenerate constant
/// features are widened by 1.0 on the max side.
struct NormalizationSpec {
  struct Range {
    double lo = 0.0;
    double hi = 1.0;
  };
  Range pv, soc, temperature, consumption;

  static double scale(const Range& r, double x);
  // Feature order matches the state vector: pv, soc, temperature, consumption.
  Eigen::Vector4d normalize(double pv_kwh, double soc_kwh, double temperature_c,
                            double consumption_kwh) const;
};

HouseSeries load_series(const std::string& path);
void save_series(const HouseSeries& series, const std::string& path);
HouseSeries synthesize_series(int days, std::uint64_t seed, const SynthProfile& profile);
NormalizationSpec fit_normalization(const HouseSeries& series, const BatterySpec& battery);

// Strict validation used by load_series; throws std::runtime_error naming the
// offending row.
void validate_series(const HouseSeries& series);

std::string to_rfc3339(std::int64_t epoch_seconds);
std::int64_t from_rfc3339(const std::string& text);

}  // namespace fedgrid
