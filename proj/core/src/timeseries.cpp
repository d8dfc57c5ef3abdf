#include "cmlrain/timeseries.hpp"

#include <cmath>

#include "cmlrain/errors.hpp"

namespace cmlrain {

std::string unit_name(Unit u) {
  switch (u) {
    case Unit::dBm: return "dBm";
    case Unit::mm_per_h: return "mm_per_h";
    case Unit::mm_accum: return "mm_accum";
    case Unit::dimensionless: return "dimensionless";
  }
  return "dimensionless";
}

Unit unit_from_name(const std::string& s) {
  if (s == "dBm") return Unit::dBm;
  if (s == "mm_per_h") return Unit::mm_per_h;
  if (s == "mm_accum") return Unit::mm_accum;
  if (s == "dimensionless") return Unit::dimensionless;
  throw ConfigInvalid("unknown unit: " + s);
}

size_t TimeSeries::missing_count() const {
  size_t n = 0;
  for (const auto& v : values) {
    if (!v.has_value()) ++n;
  }
  return n;
}

bool TimeSeries::has_missing() const {
  for (const auto& v : values) {
    if (!v.has_value()) return true;
  }
  return false;
}

void TimeSeries::validate() const {
  if (step_s <= 0) throw ConfigInvalid("TimeSeries step_s must be positive");
}

void LinkMeta::validate() const {
  if (length_km <= 0.0) {
    throw MalformedHeader("link " + link_id + ": length_km must be > 0");
  }
  if (frequency_ghz < 1.0 || frequency_ghz > 100.0) {
    throw MalformedHeader("link " + link_id + ": frequency_ghz out of [1,100]");
  }
  if (sampling_interval_s <= 0 || 60 % sampling_interval_s != 0) {
    throw MalformedHeader("link " + link_id +
                          ": sampling_interval_s must divide 60");
  }
}

void GaugeRecord::validate() const {
  if (resolution_mm <= 0.0) {
    throw MalformedHeader("gauge " + gauge_id + ": resolution_mm must be > 0");
  }
  for (size_t i = 0; i < series.values.size(); ++i) {
    const auto& v = series.values[i];
    if (!v.has_value()) continue;
    if (*v < 0.0) {
      throw ResolutionViolation("gauge " + gauge_id + " sample " +
                                std::to_string(i) + " is negative");
    }
    double ticks = *v / resolution_mm;
    if (std::abs(ticks - std::round(ticks)) > 1e-9) {
      throw ResolutionViolation("gauge " + gauge_id + " sample " +
                                std::to_string(i) + " = " + std::to_string(*v) +
                                " is not a multiple of resolution " +
                                std::to_string(resolution_mm));
    }
  }
}

}  // namespace cmlrain
