#include <cmath>
#include <filesystem>
#include <fstream>

#include "cmlrain/errors.hpp"
#include "cmlrain/eval.hpp"
#include "cmlrain/report.hpp"
#include "cmlrain/rng.hpp"
#include "doctest.h"

using namespace cmlrain;

namespace {

// Naive-loop reference for the four metrics, coded straight from their
// definitions and kept independent of the library implementation.
struct OracleMetrics {
  double rmse, mae;
  bool r2_defined = false, pcc_defined = false;
  double r2 = 0, pcc = 0;
};

OracleMetrics oracle_metrics(const std::vector<double>& y,
                             const std::vector<double>& yhat) {
  OracleMetrics o{0, 0};
  double n = static_cast<double>(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    o.rmse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    o.mae += std::abs(y[i] - yhat[i]);
  }
  o.rmse = std::sqrt(o.rmse / n);
  o.mae /= n;
  double ybar = 0, phat = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    ybar += y[i];
    phat += yhat[i];
  }
  ybar /= n;
  phat /= n;
  double sst = 0, sse = 0, spp = 0, sxy = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    sst += (y[i] - ybar) * (y[i] - ybar);
    sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    spp += (yhat[i] - phat) * (yhat[i] - phat);
    sxy += (y[i] - ybar) * (yhat[i] - phat);
  }
  if (sst > 0) {
    o.r2_defined = true;
    o.r2 = 1.0 - sse / sst;
  }
  if (sst > 0 && spp > 0) {
    o.pcc_defined = true;
    o.pcc = sxy / (std::sqrt(sst) * std::sqrt(spp));
  }
  return o;
}

TimeSeries rate_series(const std::vector<double>& vals,
                       int64_t start = 1440201600) {  // 2015-08-22
  TimeSeries ts;
  ts.start = start;
  ts.step_s = 60;
  ts.unit = Unit::mm_per_h;
  for (double v : vals) ts.values.emplace_back(v);
  return ts;
}

// Brute-force event reference: expand the wet set with the merge rule by
// scanning every pair of wet minutes rather than walking runs.
std::vector<std::pair<int64_t, int64_t>> oracle_events(const std::vector<double>& rate) {
  std::vector<int64_t> wet;
  for (size_t i = 0; i < rate.size(); ++i) {
    if (rate[i] > 0.1) wet.push_back(static_cast<int64_t>(i));
  }
  std::vector<std::pair<int64_t, int64_t>> spans;
  for (int64_t w : wet) {
    if (!spans.empty() && w - spans.back().second - 1 < 60) {
      spans.back().second = w;
    } else {
      spans.push_back({w, w});
    }
  }
  std::vector<std::pair<int64_t, int64_t>> kept;
  for (auto [s, e] : spans) {
    if (e - s + 1 >= 30) kept.push_back({s, e});
  }
  return kept;
}

}  // namespace

TEST_CASE("perfect prediction scores (0, 1, 1, 0)") {
  std::vector<double> y = {0.0, 1.5, 0.2, 3.0};
  Metrics m = metrics(y, y);
  CHECK(m.rmse == 0.0);
  CHECK(m.mae == 0.0);
  CHECK(*m.r2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*m.pcc == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("predicting the mean pins R^2 at zero") {
  std::vector<double> y = {0.0, 1.0, 2.0, 3.0};
  std::vector<double> yhat(4, 1.5);
  Metrics m = metrics(y, yhat);
  CHECK(*m.r2 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_FALSE(m.pcc.has_value());  // constant prediction has no correlation
}

TEST_CASE("hand-evaluated metrics on y=[0,1,2], yhat=[0,2,2]") {
  std::vector<double> y = {0, 1, 2};
  std::vector<double> yhat = {0, 2, 2};
  Metrics m = metrics(y, yhat);
  CHECK(m.rmse == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-15));
  CHECK(m.mae == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  OracleMetrics o = oracle_metrics(y, yhat);
  CHECK(*m.r2 == doctest::Approx(o.r2).epsilon(1e-15));
  CHECK(*m.pcc == doctest::Approx(o.pcc).epsilon(1e-15));
}

TEST_CASE("metrics agree with the naive-loop oracle on 100 random vectors") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 2 + rng.below(300);
    std::vector<double> y, yhat;
    for (size_t i = 0; i < n; ++i) {
      y.push_back(std::max(0.0, rng.normal(1.0, 2.0)));
      yhat.push_back(std::max(0.0, rng.normal(1.0, 2.0)));
    }
    Metrics m = metrics(y, yhat);
    OracleMetrics o = oracle_metrics(y, yhat);
    CHECK(std::abs(m.rmse - o.rmse) < 1e-12);
    CHECK(std::abs(m.mae - o.mae) < 1e-12);
    CHECK(m.r2.has_value() == o.r2_defined);
    if (o.r2_defined) CHECK(std::abs(*m.r2 - o.r2) < 1e-12);
    if (o.pcc_defined) CHECK(std::abs(*m.pcc - o.pcc) < 1e-12);
    CHECK(m.rmse >= m.mae);  // power-mean inequality
  }
}

TEST_CASE("pcc is invariant under positive affine maps of the prediction") {
  Rng rng(42);
  std::vector<double> y, yhat;
  for (int i = 0; i < 200; ++i) {
    y.push_back(rng.normal(0, 1));
    yhat.push_back(0.7 * y.back() + rng.normal(0, 0.4));
  }
  Metrics base = metrics(y, yhat);
  for (double a : {0.5, 2.0, 10.0}) {
    std::vector<double> mapped;
    for (double v : yhat) mapped.push_back(a * v - 3.1);
    Metrics m = metrics(y, mapped);
    CHECK(std::abs(*m.pcc - *base.pcc) < 1e-12);
  }
}

TEST_CASE("degenerate truth variance leaves r2/pcc undefined but errors valid") {
  std::vector<double> y(5, 2.0);
  std::vector<double> yhat = {1.9, 2.1, 2.0, 2.2, 1.8};
  Metrics m = metrics(y, yhat);
  CHECK_FALSE(m.r2.has_value());
  CHECK_FALSE(m.pcc.has_value());
  CHECK(m.rmse > 0.0);
  CHECK(m.mae > 0.0);
  CHECK_THROWS_AS(metrics({1.0, 2.0}, {1.0}), LengthMismatch);
  CHECK_THROWS_AS(metrics({1.0}, {1.0}), LengthMismatch);
}

TEST_CASE("no rain, no events") {
  CHECK(detect_events(rate_series(std::vector<double>(300, 0.0))).empty());
}

TEST_CASE("a 45-minute block at 1 mm/h is one event with total 0.75 mm") {
  std::vector<double> r(200, 0.0);
  for (int i = 60; i < 105; ++i) r[i] = 1.0;
  auto events = detect_events(rate_series(r));
  REQUIRE(events.size() == 1);
  CHECK(events[0].duration_min() == 45);
  CHECK(events[0].peak_mm_h == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(events[0].total_mm == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("two 20-minute runs separated by 30 dry minutes merge into one") {
  std::vector<double> r(300, 0.0);
  for (int i = 50; i < 70; ++i) r[i] = 2.0;
  for (int i = 100; i < 120; ++i) r[i] = 3.0;
  auto events = detect_events(rate_series(r));
  REQUIRE(events.size() == 1);
  CHECK(events[0].duration_min() == 70);
  CHECK(events[0].peak_mm_h == doctest::Approx(3.0));
}

TEST_CASE("a 60-minute dry gap separates events") {
  std::vector<double> r(400, 0.0);
  for (int i = 30; i < 65; ++i) r[i] = 1.0;
  for (int i = 125; i < 160; ++i) r[i] = 1.0;  // gap of exactly 60 dry minutes
  auto events = detect_events(rate_series(r));
  CHECK(events.size() == 2);
}

TEST_CASE("exactly-0.1 rates are dry (strict threshold)") {
  std::vector<double> r(100, 0.1);
  CHECK(detect_events(rate_series(r)).empty());
}

TEST_CASE("event detection matches the brute-force reference on random series") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 200 + rng.below(1200);
    std::vector<double> r(n, 0.0);
    size_t i = 0;
    while (i < n) {
      if (rng.uniform() < 0.3) {
        size_t len = 1 + rng.below(90);
        double rate = rng.uniform(0.0, 4.0);  // sometimes below threshold
        for (size_t j = i; j < std::min(n, i + len); ++j) r[j] = rate;
        i += len;
      }
      i += 1 + rng.below(120);
    }
    auto got = detect_events(rate_series(r));
    auto expect = oracle_events(r);
    REQUIRE(got.size() == expect.size());
    for (size_t e = 0; e < got.size(); ++e) {
      CHECK(got[e].start == rate_series(r).time_at(static_cast<size_t>(expect[e].first)));
      CHECK(got[e].end == rate_series(r).time_at(static_cast<size_t>(expect[e].second)));
    }
  }
}

TEST_CASE("events are invariant under appended dry hours") {
  std::vector<double> r(120, 0.0);
  for (int i = 10; i < 50; ++i) r[i] = 1.5;
  auto base = detect_events(rate_series(r));

  std::vector<double> padded(240, 0.0);
  for (int i = 0; i < 120; ++i) padded[i + 120] = r[i];
  TimeSeries shifted = rate_series(padded, 1440201600 - 120 * 60);
  auto moved = detect_events(shifted);
  REQUIRE(base.size() == moved.size());
  for (size_t i = 0; i < base.size(); ++i) {
    CHECK(base[i].start == moved[i].start);
    CHECK(base[i].total_mm == doctest::Approx(moved[i].total_mm).epsilon(1e-15));
  }
}

TEST_CASE("per-day stats: one row per day, exact on identical series") {
  std::vector<double> y, yhat;
  std::vector<int64_t> times;
  int64_t start = parse_date("2015-08-22");
  for (int d = 0; d < 3; ++d) {
    for (int m = 0; m < 100; ++m) {
      double v = 0.3 * m * (d + 1);
      y.push_back(v);
      yhat.push_back(v);
      times.push_back(start + d * kSecondsPerDay + m * 60);
    }
  }
  PerDayResult r = per_day_stats(y, yhat, times);
  REQUIRE(r.days.size() == 3);
  for (const auto& d : r.days) {
    CHECK(d.m.rmse == 0.0);
    CHECK(d.m.mae == 0.0);
    CHECK(*d.m.r2 == doctest::Approx(1.0));
    CHECK(*d.m.pcc == doctest::Approx(1.0));
  }
}

TEST_CASE("single-day stats match the global metrics") {
  Rng rng(44);
  std::vector<double> y, yhat;
  std::vector<int64_t> times;
  int64_t start = parse_date("2015-08-26");
  for (int m = 0; m < 500; ++m) {
    y.push_back(std::max(0.0, rng.normal(1, 1)));
    yhat.push_back(std::max(0.0, rng.normal(1, 1)));
    times.push_back(start + m * 60);
  }
  PerDayResult r = per_day_stats(y, yhat, times);
  REQUIRE(r.days.size() == 1);
  Metrics global = metrics(y, yhat);
  CHECK(r.days[0].m.rmse == doctest::Approx(global.rmse).epsilon(1e-15));
  CHECK(*r.days[0].m.pcc == doctest::Approx(*global.pcc).epsilon(1e-15));
}

TEST_CASE("ten synthetic days produce ten rows and short days are skipped") {
  std::vector<double> y, yhat;
  std::vector<int64_t> times;
  int64_t start = parse_date("2015-08-22");
  for (int d = 0; d < 10; ++d) {
    for (int m = 0; m < 50; ++m) {
      y.push_back(m);
      yhat.push_back(m + 1);
      times.push_back(start + d * kSecondsPerDay + m * 60);
    }
  }
  // An eleventh day with a single sample is skipped with a note.
  y.push_back(1.0);
  yhat.push_back(1.0);
  times.push_back(start + 10 * kSecondsPerDay);
  PerDayResult r = per_day_stats(y, yhat, times);
  CHECK(r.days.size() == 10);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0] == start + 10 * kSecondsPerDay);
}

TEST_CASE("report emission round trips and the SVG is structurally sound") {
  namespace fs = std::filesystem;
  auto dir = (fs::temp_directory_path() / "cmlrain_tests" / "report").string();

  Rng rng(45);
  std::vector<double> truth, p1, p2;
  std::vector<int64_t> times;
  int64_t start = parse_date("2015-08-22");
  for (int m = 0; m < 2880; ++m) {
    double v = m % 300 < 40 ? 2.0 : 0.0;
    truth.push_back(v);
    p1.push_back(std::max(0.0, v + rng.normal(0, 0.2)));
    p2.push_back(std::max(0.0, v + rng.normal(0, 0.4)));
    times.push_back(start + m * 60);
  }
  std::vector<EvalReport> reports = {evaluate_series("ModelA", truth, p1, times),
                                     evaluate_series("PL", truth, p2, times)};
  emit_combined_report(reports, dir);

  auto rows = read_metrics_csv(dir + "/metrics.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].estimator == "ModelA");
  CHECK(rows[0].m.rmse == reports[0].overall.rmse);  // %.17g round trip
  CHECK(*rows[0].m.r2 == *reports[0].overall.r2);
  CHECK(rows[1].m.mae == reports[1].overall.mae);

  std::ifstream svg(dir + "/timeseries.svg");
  std::string text((std::istreambuf_iterator<char>(svg)),
                   std::istreambuf_iterator<char>());
  size_t polylines = 0, at = 0;
  while ((at = text.find("<polyline", at)) != std::string::npos) {
    ++polylines;
    at += 9;
  }
  CHECK(polylines == 3);  // gauge + two estimators

  std::ifstream events(dir + "/events.csv");
  std::string header;
  std::getline(events, header);
  CHECK(header == "start,end,duration_min,peak_mm_h,total_mm");
  int event_rows = 0;
  std::string line;
  while (std::getline(events, line)) ++event_rows;
  CHECK(event_rows == static_cast<int>(reports[0].events.size()));
  CHECK(event_rows > 0);
}

TEST_CASE("an empty event list still writes a header-only csv") {
  namespace fs = std::filesystem;
  auto dir = (fs::temp_directory_path() / "cmlrain_tests" / "report_empty").string();
  std::vector<double> truth(100, 0.0), pred(100, 0.0);
  std::vector<int64_t> times;
  int64_t start = parse_date("2015-08-22");
  for (int m = 0; m < 100; ++m) times.push_back(start + m * 60);
  // Flat series: r2/pcc undefined -> empty cells, never zeros.
  EvalReport r = evaluate_series("flat", truth, pred, times);
  emit_report(r, dir);
  std::ifstream events(dir + "/events.csv");
  std::string line;
  int lines = 0;
  while (std::getline(events, line)) ++lines;
  CHECK(lines == 1);

  auto rows = read_metrics_csv(dir + "/metrics.csv");
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].m.r2.has_value());
  CHECK_FALSE(rows[0].m.pcc.has_value());
}
