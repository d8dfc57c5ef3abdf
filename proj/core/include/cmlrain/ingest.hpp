#pragma once

#include <map>
#include <string>

#include "cmlrain/timeseries.hpp"

namespace cmlrain {

// Maps canonical column names ("time", "rsl", "tsl", "accum_mm") onto the
// source file's header names. Identity by default; loaded from a JSON file
// of {"canonical": "source column"} pairs to adapt foreign exports.
using ColumnMap = std::map<std::string, std::string>;

ColumnMap load_column_map(const std::string& path);

// Canonical link CSV: optional "# key = value" metadata preamble
// (link_id, length_km, frequency_ghz, sampling_interval_s, polarization,
// near_lat/..., all but the first three optional), then a header row naming
// time, rsl and tsl columns, then ISO-8601 UTC rows. Unparseable numeric
// cells become missing values; rows absent from the uniform grid do too.
LinkRecord parse_link_csv(const std::string& path, const ColumnMap& cols = {});

// Canonical gauge CSV: "# gauge_id", "# resolution_mm" (and optional
// "# gauge_type") preamble, then time/accum_mm rows. Accumulations are
// validated to be non-negative multiples of resolution_mm.
GaugeRecord parse_gauge_csv(const std::string& path, const ColumnMap& cols = {});

// Round trips through parse_* preserving every non-missing value exactly
// (missing serializes to an empty cell).
void write_link_csv(const std::string& path, const LinkRecord& link);
void write_gauge_csv(const std::string& path, const GaugeRecord& gauge);

}  // namespace cmlrain
