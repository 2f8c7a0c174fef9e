#include "fedgrid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedgrid/env.hpp"
#include "fedgrid/rng.hpp"

namespace fedgrid {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil_from_days counterpart).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yr + (m <= 2));
}

[[noreturn]] void fail_row(std::size_t row, const std::string& what) {
  throw std::runtime_error("series row " + std::to_string(row) + ": " + what);
}

}  // namespace

std::string to_rfc3339(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t sod = t % 86400;
  if (sod < 0) {
    sod += 86400;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60),
                static_cast<int>(sod % 60));
  return buf;
}

std::int64_t from_rfc3339(const std::string& text) {
  int y, mo, d, h, mi, s;
  char tz;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h,
                  &mi, &s, &tz) != 7 ||
      tz != 'Z') {
    throw std::runtime_error("bad RFC 3339 timestamp: " + text);
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

void validate_series(const HouseSeries& series) {
  if (series.rows.size() < static_cast<std::size_t>(kStepsPerDay)) {
    throw std::runtime_error("series shorter than one day (" +
                             std::to_string(series.rows.size()) + " rows)");
  }
  const std::int64_t spacing = series.step_minutes * 60;
  for (std::size_t i = 0; i < series.rows.size(); ++i) {
    const SeriesRow& r = series.rows[i];
    if (!std::isfinite(r.temperature_c) || !std::isfinite(r.consumption_kwh) ||
        !std::isfinite(r.pv_kwh)) {
      fail_row(i, "non-finite value");
    }
    if (r.consumption_kwh < 0.0) fail_row(i, "negative consumption_kwh");
    if (r.pv_kwh < 0.0) fail_row(i, "negative pv_kwh");
    if (i > 0) {
      const std::int64_t dt = r.timestamp - series.rows[i - 1].timestamp;
      if (dt <= 0) fail_row(i, "non-monotone timestamp");
      if (dt != spacing) fail_row(i, "non-constant spacing");
    }
  }
}

HouseSeries load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp,temperature_c,consumption_kwh,pv_kwh") {
    throw std::runtime_error("unexpected CSV header: " + line);
  }
  HouseSeries series;
  series.house_id = path;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) fail_row(row, "expected 4 columns, got " +
                                              std::to_string(fields.size()));
    SeriesRow r;
    try {
      r.timestamp = from_rfc3339(fields[0]);
      r.temperature_c = std::stod(fields[1]);
      r.consumption_kwh = std::stod(fields[2]);
      r.pv_kwh = std::stod(fields[3]);
    } catch (const std::exception& e) {
      fail_row(row, std::string("parse failure: ") + e.what());
    }
    series.rows.push_back(r);
    ++row;
  }
  validate_series(series);
  return series;
}

void save_series(const HouseSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "timestamp,temperature_c,consumption_kwh,pv_kwh\n";
  char buf[96];
  for (const SeriesRow& r : series.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", r.temperature_c,
                  r.consumption_kwh, r.pv_kwh);
    out << to_rfc3339(r.timestamp) << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failure on " + path);
}

HouseSeries synthesize_series(int days, std::uint64_t seed,
                              const SynthProfile& profile) {
  if (days < 1) throw std::runtime_error("synthesize_series: days must be >= 1");
  Rng rng(derive_seed(seed, "synth"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noisy = [&](double x) {
    return x * std::max(0.0, 1.0 + profile.noise_sigma * gauss(rng));
  };

  constexpr double kPi = 3.14159265358979323846;
  HouseSeries series;
  series.house_id = "synth-" + std::to_string(seed);
  series.rows.reserve(static_cast<std::size_t>(days) * kStepsPerDay);
  for (int day = 0; day < days; ++day) {
    for (int i = 0; i < kStepsPerDay; ++i) {
      const double minute = i * static_cast<double>(kStepMinutes);
      SeriesRow r;
      r.timestamp = profile.start_epoch +
                    (static_cast<std::int64_t>(day) * kStepsPerDay + i) *
                        kStepMinutes * 60;

      // PV: clipped half-sine between 06:00 and 18:00, zero at night.
      double pv = 0.0;
      if (minute > 360.0 && minute < 1080.0) {
        pv = profile.pv_peak_kwh * std::sin(kPi * (minute - 360.0) / 720.0);
      }
      r.pv_kwh = pv > 0.0 ? noisy(pv) : 0.0;

      // Consumption: flat base plus Gaussian bumps at 07:30 and 19:30.
      const double morning = std::exp(-0.5 * std::pow((minute - 450.0) / 90.0, 2));
      const double evening = std::exp(-0.5 * std::pow((minute - 1170.0) / 120.0, 2));
      r.consumption_kwh = noisy(profile.base_load_kwh +
                                profile.morning_peak_kwh * morning +
                                profile.evening_peak_kwh * evening);

      // Temperature: daily sinusoid peaking at 15:00.
      r.temperature_c = noisy(profile.temp_mean_c +
                              profile.temp_amplitude_c *
                                  std::cos(2.0 * kPi * (minute - 900.0) / 1440.0));
      series.rows.push_back(r);
    }
  }
  validate_series(series);
  return series;
}

double NormalizationSpec::scale(const Range& r, double x) {
  const double v = (x - r.lo) / (r.hi - r.lo);
  return std::clamp(v, 0.0, 1.0);
}

Eigen::Vector4d NormalizationSpec::normalize(double pv_kwh, double soc_kwh,
                                             double temperature_c,
                                             double consumption_kwh) const {
  return {scale(pv, pv_kwh), scale(soc, soc_kwh),
          scale(temperature, temperature_c), scale(consumption, consumption_kwh)};
}

NormalizationSpec fit_normalization(const HouseSeries& series,
                                    const BatterySpec& battery) {
  validate_series(series);
  NormalizationSpec spec;
  auto fit = [](NormalizationSpec::Range& r, double lo, double hi) {
    if (hi <= lo) hi = lo + 1.0;  // widen degenerate constant features
    r.lo = lo;
    r.hi = hi;
  };
  double tlo = series.rows[0].temperature_c, thi = tlo;
  double clo = series.rows[0].consumption_kwh, chi = clo;
  double plo = series.rows[0].pv_kwh, phi = plo;
  for (const SeriesRow& r : series.rows) {
    tlo = std::min(tlo, r.temperature_c);
    thi = std::max(thi, r.temperature_c);
    clo = std::min(clo, r.consumption_kwh);
    chi = std::max(chi, r.consumption_kwh);
    plo = std::min(plo, r.pv_kwh);
    phi = std::max(phi, r.pv_kwh);
  }
  fit(spec.temperature, tlo, thi);
  fit(spec.consumption, clo, chi);
  fit(spec.pv, plo, phi);
  fit(spec.soc, 0.0, battery.capacity_kwh);
  return spec;
}

}  // namespace fedgrid
