#pragma once

#include <string>
#include <vector>

#include "cmlrain/tensor.hpp"
#include "cmlrain/timeseries.hpp"

namespace cmlrain {

// 10-s RSL -> 1-min by averaging non-overlapping blocks of six samples.
// A block containing any missing sample stays missing (imputation is a
// separate stage); a trailing partial block is dropped.
TimeSeries downsample_rsl(const TimeSeries& rsl_10s);

// 1-min accumulations (mm) -> rate (mm/h): multiply by 60, then a centered
// moving average of odd width smooth_win with shrinking edge windows.
TimeSeries gauge_to_rate(const GaugeRecord& gauge, int smooth_win);

// Fills interior gaps with a local least-squares polynomial of the given
// order fitted to the nearest non-missing neighbors; leading/trailing gaps
// use nearest-value extension. Non-missing samples are never touched.
TimeSeries impute(const TimeSeries& ts, int order, int neighbors = 4);

struct ScalerState {
  double median = 0.0;
  double iqr = 1.0;        // the divisor actually applied (1 when degenerate)
  bool degenerate = false; // raw IQR was 0
};

// Quartiles use linear interpolation between order statistics (the result
// depends on this choice, so it is fixed and documented).
ScalerState fit_robust_scaler(const std::vector<double>& xs);
double scale_value(const ScalerState& s, double x);
double unscale_value(const ScalerState& s, double x);

struct ScaledColumn {
  std::vector<double> values;
  ScalerState state;
};
ScaledColumn robust_scale(const std::vector<double>& col);

// Cyclic encodings: hour-of-day on a 24 period, minute-of-hour on a 60
// period.
struct TimeFeatures {
  double sin_hour, cos_hour, sin_min, cos_min;
};
TimeFeatures time_features(int64_t t);

enum class Split { train, val, test };

struct DateRange {
  int64_t first_day = 0;  // midnight UTC, inclusive
  int64_t last_day = 0;   // midnight UTC of the last included day
  bool contains_minute(int64_t t) const {
    return t >= first_day && t < last_day + kSecondsPerDay;
  }
};

struct SplitBounds {
  DateRange train, val, test;
  // Ordered, non-overlapping, with at least one full buffer day between
  // consecutive ranges.
  void validate() const;
};

SplitBounds default_split_bounds();  // 2015: Jun 1-Aug 2 / Aug 4-20 / Aug 22-31

// Aligned 1-min model inputs: one (scaled) RSL column per sub-link followed
// by the four time encodings, plus the mm/h target at each row's minute.
struct FeatureMatrix {
  int64_t start = 0;  // minute of row 0
  std::vector<std::string> feature_names;
  Tensor values;                     // [T x F]
  std::vector<double> targets;       // [T] mm/h
  std::vector<ScalerState> scalers;  // per column
  std::vector<bool> scaled;          // false for the bounded time features

  int64_t minute_at(int64_t row) const { return start + row * 60; }
};

struct SplitData {
  Tensor inputs;                      // [N x W x F]
  std::vector<double> targets;        // [N] mm/h
  std::vector<int64_t> target_times;  // [N] epoch seconds

  int64_t count() const { return static_cast<int64_t>(targets.size()); }
};

struct WindowedDataset {
  int window_len = 30;
  std::vector<std::string> feature_names;
  std::vector<ScalerState> scalers;
  std::vector<bool> scaled;
  SplitData train, val, test;

  int n_features() const { return static_cast<int>(feature_names.size()); }
};

// Sliding windows of `window_len` input minutes with stride 1; the target
// is the minute immediately after the window. A window joins a split only
// if every input minute and the target minute fall inside that split's date
// range, so buffer days appear in no window at all.
WindowedDataset chrono_split(const FeatureMatrix& fm, const SplitBounds& bounds,
                             int window_len);

struct PreprocessConfig {
  int smooth_window_min = 5;
  int impute_order = 2;
  int impute_neighbors = 4;
  int window_len = 30;
  SplitBounds split = default_split_bounds();
};

// Full feature pipeline: downsample, impute, target conversion, time
// features, train-only scaler fit, windowing. Scalers are fitted on train
// rows only and the fit is re-checked before returning.
WindowedDataset build_dataset(const std::vector<LinkRecord>& links,
                              const GaugeRecord& gauge,
                              const PreprocessConfig& cfg);

}  // namespace cmlrain
