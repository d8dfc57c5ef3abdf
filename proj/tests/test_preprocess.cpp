#include <algorithm>
#include <cmath>
#include <set>

#include "cmlrain/errors.hpp"
#include "cmlrain/preprocess.hpp"
#include "cmlrain/rng.hpp"
#include "cmlrain/synth.hpp"
#include "doctest.h"

using namespace cmlrain;

namespace {

TimeSeries make_series(int step_s, std::vector<std::optional<double>> vals,
                       int64_t start = 1433116800) {
  TimeSeries ts;
  ts.start = start;
  ts.step_s = step_s;
  ts.values = std::move(vals);
  return ts;
}

// Independent quantile oracle: naive sort + linear interpolation, written
// against the definition rather than the library code.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double h = p * (static_cast<double>(v.size()) - 1.0);
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = static_cast<size_t>(std::ceil(h));
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("downsample averages six samples") {
  TimeSeries out = downsample_rsl(make_series(10, {1, 2, 3, 4, 5, 6}));
  REQUIRE(out.size() == 1);
  CHECK(out.step_s == 60);
  CHECK(*out.values[0] == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("downsample keeps constants and drops the trailing partial block") {
  std::vector<std::optional<double>> vals(13, -42.5);
  TimeSeries out = downsample_rsl(make_series(10, vals));
  REQUIRE(out.size() == 2);  // 13 samples -> 2 blocks, last sample dropped
  CHECK(*out.values[0] == -42.5);
  CHECK(*out.values[1] == -42.5);
}

TEST_CASE("downsample propagates missing blocks and validates the step") {
  std::vector<std::optional<double>> vals(12, 1.0);
  vals[7] = std::nullopt;
  TimeSeries out = downsample_rsl(make_series(10, vals));
  CHECK(out.values[0].has_value());
  CHECK_FALSE(out.values[1].has_value());

  CHECK_THROWS_AS(downsample_rsl(make_series(60, {1, 2, 3, 4, 5, 6})), WrongStep);
  CHECK_THROWS_AS(downsample_rsl(make_series(10, {1, 2, 3})), WrongStep);
}

TEST_CASE("downsampling commutes with daily means when nothing is missing") {
  Rng rng(21);
  std::vector<std::optional<double>> vals;
  for (int i = 0; i < 8640; ++i) vals.emplace_back(rng.normal(-45, 2));
  TimeSeries raw = make_series(10, vals);
  TimeSeries day = downsample_rsl(raw);
  double raw_mean = 0.0, down_mean = 0.0;
  for (const auto& v : raw.values) raw_mean += *v;
  for (const auto& v : day.values) down_mean += *v;
  raw_mean /= static_cast<double>(raw.size());
  down_mean /= static_cast<double>(day.size());
  CHECK(raw_mean == doctest::Approx(down_mean).epsilon(1e-12));
}

TEST_CASE("gauge_to_rate converts and smooths") {
  GaugeRecord g;
  g.resolution_mm = 0.1;
  g.series = make_series(60, {0.1});
  g.series.unit = Unit::mm_accum;
  CHECK(*gauge_to_rate(g, 1).values[0] == doctest::Approx(6.0).epsilon(1e-15));

  g.series = make_series(60, {0.0, 0.0, 0.0, 0.0});
  for (const auto& v : gauge_to_rate(g, 3).values) CHECK(*v == 0.0);

  // [0,6,0] mm/h smoothed with width 3: center becomes mean(0,6,0) = 2.
  g.series = make_series(60, {0.0, 0.1, 0.0});
  TimeSeries rate = gauge_to_rate(g, 3);
  CHECK(*rate.values[1] == doctest::Approx(2.0).epsilon(1e-12));
  // Shrinking edges: first value = mean(0,6) = 3.
  CHECK(*rate.values[0] == doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(gauge_to_rate(g, 2), ConfigInvalid);
}

TEST_CASE("impute fills a linear midpoint") {
  TimeSeries out = impute(make_series(60, {1.0, std::nullopt, 3.0}), 1);
  CHECK(*out.values[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(*out.values[0] == 1.0);
  CHECK(*out.values[2] == 3.0);
}

TEST_CASE("impute is the identity without gaps") {
  TimeSeries ts = make_series(60, {5.0, 6.0, 7.0});
  TimeSeries out = impute(ts, 2);
  for (size_t i = 0; i < ts.size(); ++i) CHECK(*out.values[i] == *ts.values[i]);
}

TEST_CASE("impute fits the local quadratic through 4 neighbors") {
  // Points (0,0),(1,1),(3,9),(4,16) lie exactly on y = x^2, so the gap at
  // x = 2 must fill with 4.
  TimeSeries out =
      impute(make_series(60, {0.0, 1.0, std::nullopt, 9.0, 16.0}), 2, 4);
  CHECK(*out.values[2] == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("impute extends edges with the nearest value") {
  TimeSeries out = impute(
      make_series(60, {std::nullopt, std::nullopt, 5.0, 7.0, std::nullopt}), 1);
  CHECK(*out.values[0] == 5.0);
  CHECK(*out.values[1] == 5.0);
  CHECK(*out.values[4] == 7.0);
}

TEST_CASE("impute needs order+1 known points") {
  CHECK_THROWS_AS(impute(make_series(60, {1.0, std::nullopt, std::nullopt}), 1),
                  TooSparse);
}

TEST_CASE("robust scaler matches the hand quantiles of 1..5") {
  ScaledColumn sc = robust_scale({1, 2, 3, 4, 5});
  CHECK(sc.state.median == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(sc.state.iqr == doctest::Approx(2.0).epsilon(1e-15));  // Q3=4, Q1=2
  CHECK(sc.values.back() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(sc.state.degenerate);
}

TEST_CASE("robust scaler matches the quantile oracle on random columns") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 2 + rng.below(200);
    std::vector<double> xs;
    for (size_t i = 0; i < n; ++i) xs.push_back(rng.normal(0.0, 5.0));
    ScalerState s = fit_robust_scaler(xs);
    double med = oracle_quantile(xs, 0.5);
    double iqr = oracle_quantile(xs, 0.75) - oracle_quantile(xs, 0.25);
    CHECK(std::abs(s.median - med) < 1e-12);
    if (iqr > 0) CHECK(std::abs(s.iqr - iqr) < 1e-12);
  }
}

TEST_CASE("constant columns are flagged degenerate and scale to zero") {
  ScaledColumn sc = robust_scale({4.2, 4.2, 4.2});
  CHECK(sc.state.degenerate);
  CHECK(sc.state.iqr == 1.0);
  for (double v : sc.values) CHECK(v == 0.0);
}

TEST_CASE("median-0 iqr-1 data is a fixed point") {
  std::vector<double> xs = {-0.5, 0.0, 0.5, -1.0, 1.0};
  ScaledColumn sc = robust_scale(xs);
  for (size_t i = 0; i < xs.size(); ++i) {
    CHECK(sc.values[i] == doctest::Approx(xs[i]).epsilon(1e-15));
  }
}

TEST_CASE("robust scaling inverts exactly when IQR > 0") {
  Rng rng(78);
  std::vector<double> xs;
  for (int i = 0; i < 64; ++i) xs.push_back(rng.normal(3.0, 2.0));
  ScaledColumn sc = robust_scale(xs);
  for (size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::abs(unscale_value(sc.state, sc.values[i]) - xs[i]) < 1e-12);
  }
  CHECK_THROWS_AS(fit_robust_scaler({}), EmptyColumn);
}

TEST_CASE("time features hit the cardinal points") {
  TimeFeatures midnight = time_features(parse_iso8601("2015-06-01T00:00:00Z"));
  CHECK(midnight.sin_hour == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(midnight.cos_hour == doctest::Approx(1.0).epsilon(1e-15));
  TimeFeatures six = time_features(parse_iso8601("2015-06-01T06:00:00Z"));
  CHECK(six.sin_hour == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(six.cos_hour == doctest::Approx(0.0).scale(1).epsilon(1e-15));
}

TEST_CASE("time features stay on the unit circle") {
  Rng rng(79);
  for (int i = 0; i < 500; ++i) {
    int64_t t = static_cast<int64_t>(rng.below(4102444800ULL));
    TimeFeatures tf = time_features(t);
    CHECK(std::abs(tf.sin_hour * tf.sin_hour + tf.cos_hour * tf.cos_hour - 1.0) < 1e-12);
    CHECK(std::abs(tf.sin_min * tf.sin_min + tf.cos_min * tf.cos_min - 1.0) < 1e-12);
  }
}

namespace {

// A feature matrix spanning [first_day, last_day] with one feature column.
FeatureMatrix span_matrix(const std::string& first_day, int days) {
  FeatureMatrix fm;
  fm.start = parse_date(first_day);
  int64_t rows = static_cast<int64_t>(days) * 1440;
  fm.feature_names = {"rsl_a"};
  fm.values = Tensor({static_cast<int>(rows), 1});
  for (int64_t r = 0; r < rows; ++r) fm.values[r] = static_cast<double>(r % 97);
  fm.targets.assign(static_cast<size_t>(rows), 0.5);
  fm.scalers.assign(1, ScalerState{});
  fm.scaled.assign(1, true);
  return fm;
}

}  // namespace

TEST_CASE("a 31-minute train-only matrix yields exactly one window") {
  FeatureMatrix fm;
  fm.start = parse_date("2015-06-01");
  fm.feature_names = {"rsl_a"};
  fm.values = Tensor({31, 1});
  fm.targets.assign(31, 0.0);
  fm.scalers.assign(1, ScalerState{});
  fm.scaled.assign(1, true);
  SplitBounds b = default_split_bounds();
  WindowedDataset ds = chrono_split(fm, b, 30);
  CHECK(ds.train.count() == 1);
  CHECK(ds.val.count() == 0);
  CHECK(ds.test.count() == 0);
  CHECK(ds.train.inputs.shape() == std::vector<int>{1, 30, 1});
  CHECK(ds.train.target_times[0] == fm.start + 30 * 60);
}

TEST_CASE("no window touches a buffer day and splits never share minutes") {
  FeatureMatrix fm = span_matrix("2015-06-01", 92);  // through Aug 31
  WindowedDataset ds = chrono_split(fm, default_split_bounds(), 30);
  CHECK(ds.train.count() > 0);
  CHECK(ds.val.count() > 0);
  CHECK(ds.test.count() > 0);

  int64_t aug3 = parse_date("2015-08-03");
  int64_t aug21 = parse_date("2015-08-21");
  auto touches_buffer = [&](const SplitData& s, int window_len) {
    for (int64_t t : s.target_times) {
      for (int m = 0; m <= window_len; ++m) {
        int64_t minute = t - 60 * m;
        int64_t day = day_floor(minute);
        if (day == aug3 || day == aug21) return true;
      }
    }
    return false;
  };
  CHECK_FALSE(touches_buffer(ds.train, 30));
  CHECK_FALSE(touches_buffer(ds.val, 30));
  CHECK_FALSE(touches_buffer(ds.test, 30));

  // Leakage check: the minute sets of train and test windows are disjoint.
  auto minute_set = [](const SplitData& s, int window_len) {
    std::set<int64_t> out;
    for (int64_t t : s.target_times) {
      for (int m = 0; m <= window_len; ++m) out.insert(t - 60 * m);
    }
    return out;
  };
  std::set<int64_t> train_minutes = minute_set(ds.train, 30);
  std::set<int64_t> test_minutes = minute_set(ds.test, 30);
  std::vector<int64_t> common;
  std::set_intersection(train_minutes.begin(), train_minutes.end(),
                        test_minutes.begin(), test_minutes.end(),
                        std::back_inserter(common));
  CHECK(common.empty());
}

TEST_CASE("windows straddling a split boundary are excluded") {
  // Two days of data, split = day 1 train / buffer day 2 (val/test later):
  // windows whose target falls on day 2 but inputs start on day 1 belong
  // nowhere.
  FeatureMatrix fm = span_matrix("2015-06-01", 3);
  SplitBounds b;
  b.train = {parse_date("2015-06-01"), parse_date("2015-06-01")};
  b.val = {parse_date("2015-06-03"), parse_date("2015-06-03")};
  // test range beyond the data
  b.test = {parse_date("2015-06-05"), parse_date("2015-06-05")};
  WindowedDataset ds = chrono_split(fm, b, 30);
  // Train windows: targets at minutes 30..1439 of day 1.
  CHECK(ds.train.count() == 1440 - 30);
  for (int64_t t : ds.train.target_times) {
    CHECK(day_floor(t) == parse_date("2015-06-01"));
    CHECK(day_floor(t - 30 * 60) == parse_date("2015-06-01"));
  }
  // Day-2 windows drop because their inputs reach back into day 1... only
  // those fully inside day 3 (val) survive.
  for (int64_t t : ds.val.target_times) {
    CHECK(day_floor(t - 30 * 60) == parse_date("2015-06-03"));
  }
}

TEST_CASE("split bounds validation") {
  SplitBounds b = default_split_bounds();
  CHECK_NOTHROW(b.validate());

  SplitBounds overlap = b;
  overlap.val.first_day = parse_date("2015-07-20");
  CHECK_THROWS_AS(overlap.validate(), OverlappingSplits);

  SplitBounds tight = b;
  tight.val.first_day = parse_date("2015-08-03");  // no buffer day left
  CHECK_THROWS_AS(tight.validate(), BufferTooSmall);
}

TEST_CASE("build_dataset fits scalers on train only and windows cleanly") {
  SynthConfig scfg;
  scfg.days = 8;
  scfg.noise_db = 0.2;
  SynthDataset sd = synth_dataset(13, scfg);

  PreprocessConfig cfg;
  cfg.window_len = 30;
  int64_t d0 = day_floor(scfg.start_time);
  cfg.split.train = {d0, d0 + 3 * kSecondsPerDay};
  cfg.split.val = {d0 + 5 * kSecondsPerDay, d0 + 5 * kSecondsPerDay};
  cfg.split.test = {d0 + 7 * kSecondsPerDay, d0 + 7 * kSecondsPerDay};

  WindowedDataset ds = build_dataset(sd.links, sd.gauge, cfg);
  CHECK(ds.n_features() == 7);  // 3 links + 4 time encodings
  CHECK(ds.train.count() > 0);
  CHECK(ds.val.count() > 0);
  CHECK(ds.test.count() > 0);
  CHECK(ds.feature_names[3] == "x_sin_hour");
  for (int c = 0; c < 3; ++c) CHECK(ds.scaled[static_cast<size_t>(c)]);
  for (int c = 3; c < 7; ++c) CHECK_FALSE(ds.scaled[static_cast<size_t>(c)]);
  for (double t : ds.train.targets) CHECK(t >= 0.0);
  CHECK(ds.train.inputs.all_finite());
}
