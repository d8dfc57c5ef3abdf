#include <cmath>
#include <map>

#include "cmlrain/errors.hpp"
#include "cmlrain/eval.hpp"

namespace cmlrain {

Metrics metrics(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.size() != yhat.size()) {
    throw LengthMismatch("metrics: " + std::to_string(y.size()) + " vs " +
                         std::to_string(yhat.size()));
  }
  if (y.size() < 2) throw LengthMismatch("metrics needs at least 2 samples");
  const double n = static_cast<double>(y.size());

  double y_mean = 0.0, yhat_mean = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    y_mean += y[i];
    yhat_mean += yhat[i];
  }
  y_mean /= n;
  yhat_mean /= n;

  double sse = 0.0, sae = 0.0, sst = 0.0, ss_pred = 0.0, cov = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double e = y[i] - yhat[i];
    sse += e * e;
    sae += std::abs(e);
    double dy = y[i] - y_mean;
    double dp = yhat[i] - yhat_mean;
    sst += dy * dy;
    ss_pred += dp * dp;
    cov += dy * dp;
  }

  Metrics m;
  m.n = static_cast<int64_t>(y.size());
  m.rmse = std::sqrt(sse / n);
  m.mae = sae / n;
  if (sst > 0.0) m.r2 = 1.0 - sse / sst;
  if (sst > 0.0 && ss_pred > 0.0) {
    m.pcc = cov / (std::sqrt(sst) * std::sqrt(ss_pred));
  }
  return m;
}

PerDayResult per_day_stats(const std::vector<double>& y,
                           const std::vector<double>& yhat,
                           const std::vector<int64_t>& times) {
  if (y.size() != yhat.size() || y.size() != times.size()) {
    throw LengthMismatch("per_day_stats input lengths differ");
  }
  std::map<int64_t, std::pair<std::vector<double>, std::vector<double>>> by_day;
  for (size_t i = 0; i < y.size(); ++i) {
    auto& bucket = by_day[day_floor(times[i])];
    bucket.first.push_back(y[i]);
    bucket.second.push_back(yhat[i]);
  }
  PerDayResult out;
  for (const auto& [day, pair] : by_day) {
    if (pair.first.size() < 2) {
      out.skipped.push_back(day);
      continue;
    }
    out.days.push_back({day, metrics(pair.first, pair.second)});
  }
  return out;
}

EvalReport evaluate_series(const std::string& estimator,
                           const std::vector<double>& truth,
                           const std::vector<double>& predicted,
                           const std::vector<int64_t>& times) {
  EvalReport r;
  r.estimator = estimator;
  r.overall = metrics(truth, predicted);
  r.per_day = per_day_stats(truth, predicted, times);
  r.times = times;
  r.truth = truth;
  r.predicted = predicted;
  if (!times.empty()) {
    TimeSeries ts;
    ts.start = times.front();
    ts.step_s = times.size() > 1 ? static_cast<int>(times[1] - times[0]) : 60;
    ts.unit = Unit::mm_per_h;
    for (double v : truth) ts.values.emplace_back(v);
    if (ts.step_s == 60) r.events = detect_events(ts);
  }
  return r;
}

}  // namespace cmlrain
