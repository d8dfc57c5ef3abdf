#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmlrain/timeseries.hpp"

namespace cmlrain {

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  // Undefined (not zero) when the relevant variance is zero.
  std::optional<double> r2;
  std::optional<double> pcc;
  int64_t n = 0;
};

// RMSE, R^2, PCC and MAE over paired samples. Lengths must match and be
// >= 2. Degenerate variance leaves r2/pcc unset; rmse/mae stay valid.
Metrics metrics(const std::vector<double>& y, const std::vector<double>& yhat);

struct RainEvent {
  int64_t start = 0;  // first wet minute, epoch seconds
  int64_t end = 0;    // last wet minute, inclusive
  double peak_mm_h = 0.0;
  double total_mm = 0.0;
  int64_t duration_min() const { return (end - start) / 60 + 1; }
};

// Effective rain events: wet := rate > 0.1 mm/h (strict), wet runs merged
// when separated by fewer than 60 dry minutes, merged spans kept iff they
// last at least 30 minutes. Peak and total are taken over the whole span.
// Gap merging runs before the duration filter.
std::vector<RainEvent> detect_events(const TimeSeries& rate);

struct DayStats {
  int64_t day = 0;  // midnight UTC
  Metrics m;
};

struct PerDayResult {
  std::vector<DayStats> days;
  std::vector<int64_t> skipped;  // days with < 2 samples
};

PerDayResult per_day_stats(const std::vector<double>& y,
                           const std::vector<double>& yhat,
                           const std::vector<int64_t>& times);

struct EvalReport {
  std::string estimator;
  Metrics overall;
  PerDayResult per_day;
  std::vector<RainEvent> events;  // detected on the reference series
  std::vector<int64_t> times;
  std::vector<double> truth;
  std::vector<double> predicted;
};

EvalReport evaluate_series(const std::string& estimator,
                           const std::vector<double>& truth,
                           const std::vector<double>& predicted,
                           const std::vector<int64_t>& times);

}  // namespace cmlrain
