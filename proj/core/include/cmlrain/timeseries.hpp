#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmlrain/time_utils.hpp"

namespace cmlrain {

enum class Unit { dBm, mm_per_h, mm_accum, dimensionless };

std::string unit_name(Unit u);
Unit unit_from_name(const std::string& s);

// Uniformly sampled scalar series. Missing samples are explicit
// (std::nullopt), never sentinel numbers, so imputation stays a separate
// observable stage.
struct TimeSeries {
  int64_t start = 0;  // epoch seconds, UTC
  int step_s = 60;
  Unit unit = Unit::dimensionless;
  std::vector<std::optional<double>> values;

  int64_t time_at(size_t i) const {
    return start + static_cast<int64_t>(i) * step_s;
  }
  size_t size() const { return values.size(); }
  size_t missing_count() const;
  bool has_missing() const;

  // Throws TooSparse via callers when emptiness matters; here just clamps.
  void validate() const;  // step_s > 0
};

// Per-sub-link physical parameters (lengths in km, frequency in GHz).
struct LinkMeta {
  std::string link_id;
  double length_km = 0.0;
  double frequency_ghz = 0.0;
  int sampling_interval_s = 10;
  double near_lat = 0.0, near_lon = 0.0, far_lat = 0.0, far_lon = 0.0;
  std::string polarization = "V";

  void validate() const;  // length > 0, frequency in [1,100], step divides 60
};

struct GaugeRecord {
  std::string gauge_id;
  TimeSeries series;  // unit = mm_accum, one accumulation per sample
  double resolution_mm = 0.1;
  // The source archive describes the reference gauges inconsistently
  // (tipping-bucket in one section, weighing in another); both labels are
  // accepted here and kept verbatim.
  std::string gauge_type = "unknown";

  void validate() const;  // non-missing >= 0 and multiples of resolution_mm
};

struct LinkRecord {
  LinkMeta meta;
  TimeSeries rsl;
  TimeSeries tsl;
};

}  // namespace cmlrain
