#pragma once

#include <string>
#include <vector>

#include "cmlrain/eval.hpp"

namespace cmlrain {

// Writes metrics.csv, per_day.csv, events.csv and timeseries.svg into
// out_dir. The SVG is self-contained: one polyline for the gauge plus one
// per estimator, axes labelled in mm/h and UTC time. Numbers use %.17g so
// a reload reproduces every value exactly.
void emit_report(const EvalReport& report, const std::string& out_dir);

// Same files, one metrics/per-day row per estimator, one shared SVG
// overlay. All reports must share the time grid of the first.
void emit_combined_report(const std::vector<EvalReport>& reports,
                          const std::string& out_dir);

struct MetricsRow {
  std::string estimator;
  Metrics m;
};

std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace cmlrain
