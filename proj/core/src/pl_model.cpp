#include "cmlrain/pl_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "cmlrain/errors.hpp"

namespace cmlrain {

namespace {

std::vector<double> dense_values(const TimeSeries& ts, const char* who) {
  std::vector<double> out;
  out.reserve(ts.size());
  for (const auto& v : ts.values) {
    if (!v.has_value()) {
      throw DataError(std::string(who) + ": series contains missing values");
    }
    out.push_back(*v);
  }
  return out;
}

// Sample std over the centered window [i-(w-1)/2, ...] clipped to the
// series; windows shrink at the edges, single-sample windows give 0.
std::vector<double> rolling_std(const std::vector<double>& x, int window) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size(), 0.0);
  int half_lo = (window - 1) / 2;
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - half_lo);
    int hi = std::min(n - 1, lo + window - 1);
    lo = std::max(0, hi - window + 1);
    int m = hi - lo + 1;
    if (m < 2) continue;
    double mean = 0.0;
    for (int j = lo; j <= hi; ++j) mean += x[j];
    mean /= m;
    double ss = 0.0;
    for (int j = lo; j <= hi; ++j) {
      double d = x[j] - mean;
      ss += d * d;
    }
    out[i] = std::sqrt(ss / (m - 1));
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace

double rain_attenuation_db(double rate_mm_h, double a, double b,
                           double length_km) {
  if (rate_mm_h <= 0.0) return 0.0;
  return a * std::pow(rate_mm_h, b) * length_km;
}

std::vector<PowerLawCoeff> default_power_law_table() {
  return {
      {30.0, 0.167, 1.000}, {32.0, 0.192, 0.985}, {34.0, 0.220, 0.970},
      {36.0, 0.250, 0.955}, {38.0, 0.283, 0.939}, {40.0, 0.318, 0.924},
  };
}

void PLConfig::validate() const {
  if (std_window_min < 2) throw ConfigInvalid("std_window_min must be >= 2");
  if (baseline_window_min < 1) throw ConfigInvalid("baseline_window_min must be >= 1");
  if (waa_offset_db && *waa_offset_db < 0.0) throw ConfigInvalid("waa_offset_db must be >= 0");
}

PowerLawCoeff lookup_coeff(const std::vector<PowerLawCoeff>& table,
                           double frequency_ghz) {
  if (table.empty()) throw MissingCoefficient("empty power-law table");
  const PowerLawCoeff* best = &table[0];
  double best_d = std::abs(table[0].frequency_ghz - frequency_ghz);
  for (const auto& c : table) {
    double d = std::abs(c.frequency_ghz - frequency_ghz);
    if (d < best_d) {
      best_d = d;
      best = &c;
    }
  }
  return *best;
}

double waa_offset_for(const PLConfig& cfg, double frequency_ghz) {
  if (cfg.waa_offset_db) return *cfg.waa_offset_db;
  return std::max(0.0, cfg.waa_base_db + cfg.waa_per_ghz_db * frequency_ghz);
}

double calibrate_wet_threshold(const TimeSeries& rsl, const PLConfig& cfg) {
  std::vector<double> x = dense_values(rsl, "calibrate_wet_threshold");
  std::vector<double> stds = rolling_std(x, cfg.std_window_min);
  // Rain is sparse, so the median rolling std estimates the dry-period
  // noise level.
  return cfg.wet_threshold_scale * median_of(stds);
}

std::vector<bool> wet_dry(const TimeSeries& rsl, const PLConfig& cfg,
                          double threshold_db) {
  cfg.validate();
  if (rsl.step_s != 60) throw WrongStep("wet_dry expects a 1-min series");
  if (cfg.std_window_min > static_cast<int>(rsl.size())) {
    throw WindowTooLong("std_window_min " + std::to_string(cfg.std_window_min) +
                        " > series length " + std::to_string(rsl.size()));
  }
  std::vector<double> x = dense_values(rsl, "wet_dry");
  std::vector<double> stds = rolling_std(x, cfg.std_window_min);
  std::vector<bool> wet(x.size(), false);
  for (size_t i = 0; i < x.size(); ++i) wet[i] = stds[i] > threshold_db;
  return wet;
}

TimeSeries baseline_attenuation(const TimeSeries& rsl,
                                const std::vector<bool>& wet,
                                const PLConfig& cfg) {
  if (wet.size() != rsl.size()) {
    throw LengthMismatch("wet flags / rsl length mismatch");
  }
  std::vector<double> x = dense_values(rsl, "baseline_attenuation");
  std::deque<double> window;
  std::vector<double> baseline(x.size(), std::nan(""));
  double last = std::nan("");
  for (size_t i = 0; i < x.size(); ++i) {
    if (!wet[i]) {
      window.push_back(x[i]);
      if (static_cast<int>(window.size()) > cfg.baseline_window_min) {
        window.pop_front();
      }
      last = median_of({window.begin(), window.end()});
    }
    baseline[i] = last;
  }
  if (std::isnan(last)) throw NoDryPeriod("no dry minute in series");
  // Backfill any leading wet stretch with the first established baseline.
  double first = 0.0;
  for (double b : baseline) {
    if (!std::isnan(b)) {
      first = b;
      break;
    }
  }
  TimeSeries out;
  out.start = rsl.start;
  out.step_s = rsl.step_s;
  out.unit = Unit::dimensionless;
  out.values.reserve(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double b = std::isnan(baseline[i]) ? first : baseline[i];
    out.values.emplace_back(std::max(b - x[i], 0.0));
  }
  return out;
}

TimeSeries invert_power_law(const TimeSeries& attenuation_db,
                            const std::vector<bool>& wet, const LinkMeta& meta,
                            const PLConfig& cfg) {
  if (wet.size() != attenuation_db.size()) {
    throw LengthMismatch("wet flags / attenuation length mismatch");
  }
  PowerLawCoeff c = lookup_coeff(
      cfg.coefficients.empty() ? default_power_law_table() : cfg.coefficients,
      meta.frequency_ghz);
  double waa = waa_offset_for(cfg, meta.frequency_ghz);
  double denom = c.a * meta.length_km;
  TimeSeries out;
  out.start = attenuation_db.start;
  out.step_s = attenuation_db.step_s;
  out.unit = Unit::mm_per_h;
  out.values.reserve(attenuation_db.size());
  for (size_t i = 0; i < attenuation_db.size(); ++i) {
    if (!wet[i]) {
      out.values.emplace_back(0.0);
      continue;
    }
    double a_db = std::max(attenuation_db.values[i].value_or(0.0) - waa, 0.0);
    out.values.emplace_back(std::pow(a_db / denom, 1.0 / c.b));
  }
  return out;
}

PLLinkResult pl_link_estimate(const LinkMeta& meta, const TimeSeries& rsl_1min,
                              const PLConfig& cfg) {
  PLLinkResult res;
  res.threshold_db = cfg.wet_threshold_db ? *cfg.wet_threshold_db
                                          : calibrate_wet_threshold(rsl_1min, cfg);
  res.wet = wet_dry(rsl_1min, cfg, res.threshold_db);
  res.attenuation = baseline_attenuation(rsl_1min, res.wet, cfg);
  res.rate = invert_power_law(res.attenuation, res.wet, meta, cfg);
  return res;
}

TimeSeries pl_estimate(const std::vector<LinkMeta>& metas,
                       const std::vector<TimeSeries>& rsl_1min,
                       const PLConfig& cfg) {
  if (metas.empty() || metas.size() != rsl_1min.size()) {
    throw LengthMismatch("pl_estimate: metas/series size mismatch");
  }
  for (const auto& ts : rsl_1min) {
    if (ts.start != rsl_1min[0].start || ts.step_s != rsl_1min[0].step_s ||
        ts.size() != rsl_1min[0].size()) {
      throw LengthMismatch("pl_estimate: link series are not aligned");
    }
  }
  std::vector<TimeSeries> rates;
  rates.reserve(metas.size());
  for (size_t i = 0; i < metas.size(); ++i) {
    rates.push_back(pl_link_estimate(metas[i], rsl_1min[i], cfg).rate);
  }
  TimeSeries out;
  out.start = rsl_1min[0].start;
  out.step_s = rsl_1min[0].step_s;
  out.unit = Unit::mm_per_h;
  out.values.reserve(rsl_1min[0].size());
  for (size_t t = 0; t < rsl_1min[0].size(); ++t) {
    double s = 0.0;
    for (const auto& r : rates) s += *r.values[t];
    out.values.emplace_back(s / static_cast<double>(rates.size()));
  }
  return out;
}

}  // namespace cmlrain
