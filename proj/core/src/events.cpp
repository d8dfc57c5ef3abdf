#include <algorithm>

#include "cmlrain/errors.hpp"
#include "cmlrain/eval.hpp"

namespace cmlrain {

namespace {
constexpr double kWetThreshold = 0.1;  // mm/h, strict
constexpr int64_t kMinDuration = 30;   // minutes
constexpr int64_t kMergeGap = 60;      // dry minutes; gaps < this merge
}  // namespace

std::vector<RainEvent> detect_events(const TimeSeries& rate) {
  if (rate.step_s != 60) throw WrongStep("detect_events expects 1-min series");
  const int64_t n = static_cast<int64_t>(rate.size());

  struct Run {
    int64_t s, e;  // wet-minute index range, inclusive
  };
  std::vector<Run> runs;
  for (int64_t i = 0; i < n; ++i) {
    if (!rate.values[static_cast<size_t>(i)].has_value()) {
      throw DataError("detect_events: missing samples");
    }
    bool wet = *rate.values[static_cast<size_t>(i)] > kWetThreshold;
    if (!wet) continue;
    if (!runs.empty() && runs.back().e == i - 1) {
      runs.back().e = i;
    } else {
      runs.push_back({i, i});
    }
  }

  // Merge candidate runs first, then apply the duration filter.
  std::vector<Run> merged;
  for (const Run& r : runs) {
    if (!merged.empty() && r.s - merged.back().e - 1 < kMergeGap) {
      merged.back().e = r.e;
    } else {
      merged.push_back(r);
    }
  }

  std::vector<RainEvent> events;
  for (const Run& r : merged) {
    int64_t span = r.e - r.s + 1;
    if (span < kMinDuration) continue;
    RainEvent ev;
    ev.start = rate.time_at(static_cast<size_t>(r.s));
    ev.end = rate.time_at(static_cast<size_t>(r.e));
    double peak = 0.0, total = 0.0;
    for (int64_t i = r.s; i <= r.e; ++i) {
      double v = *rate.values[static_cast<size_t>(i)];
      peak = std::max(peak, v);
      total += v / 60.0;
    }
    ev.peak_mm_h = peak;
    ev.total_mm = total;
    events.push_back(ev);
  }
  return events;
}

}  // namespace cmlrain
