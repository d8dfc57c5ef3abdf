#include "cmlrain/preprocess.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numbers>
#include <set>

#include "cmlrain/errors.hpp"

namespace cmlrain {

TimeSeries downsample_rsl(const TimeSeries& rsl_10s) {
  if (rsl_10s.step_s != 10) {
    throw WrongStep("downsample_rsl expects 10s input, got " +
                    std::to_string(rsl_10s.step_s) + "s");
  }
  if (rsl_10s.size() < 6) {
    throw WrongStep("downsample_rsl needs at least 6 samples");
  }
  TimeSeries out;
  out.start = rsl_10s.start;
  out.step_s = 60;
  out.unit = rsl_10s.unit;
  size_t blocks = rsl_10s.size() / 6;
  out.values.reserve(blocks);
  for (size_t b = 0; b < blocks; ++b) {
    double sum = 0.0;
    bool ok = true;
    for (size_t j = 0; j < 6; ++j) {
      const auto& v = rsl_10s.values[b * 6 + j];
      if (!v.has_value()) {
        ok = false;
        break;
      }
      sum += *v;
    }
    if (ok) {
      out.values.emplace_back(sum / 6.0);
    } else {
      out.values.emplace_back(std::nullopt);
    }
  }
  return out;
}

TimeSeries gauge_to_rate(const GaugeRecord& gauge, int smooth_win) {
  if (gauge.series.step_s != 60) {
    throw WrongStep("gauge_to_rate expects a 1-min series");
  }
  if (smooth_win < 1 || smooth_win % 2 == 0) {
    throw ConfigInvalid("smooth_win must be odd and >= 1");
  }
  const auto& in = gauge.series.values;
  std::vector<double> rate(in.size());
  for (size_t i = 0; i < in.size(); ++i) {
    if (!in[i].has_value()) {
      throw DataError("gauge_to_rate: impute accumulations first");
    }
    rate[i] = 60.0 * *in[i];
  }
  TimeSeries out;
  out.start = gauge.series.start;
  out.step_s = 60;
  out.unit = Unit::mm_per_h;
  out.values.reserve(rate.size());
  int half = smooth_win / 2;
  int n = static_cast<int>(rate.size());
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - half);
    int hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += rate[j];
    out.values.emplace_back(s / (hi - lo + 1));
  }
  return out;
}

namespace {

// Least-squares polynomial fit; x is centered by the caller. Degree drops
// to n_points-1 when the sample is small.
std::vector<double> polyfit(const std::vector<double>& xs,
                            const std::vector<double>& ys, int order) {
  int deg = std::min<int>(order, static_cast<int>(xs.size()) - 1);
  int m = deg + 1;
  // Normal equations A c = r with A[i][j] = sum x^(i+j).
  std::vector<double> pow_sums(2 * m - 1, 0.0);
  std::vector<double> r(m, 0.0);
  for (size_t p = 0; p < xs.size(); ++p) {
    double xp = 1.0;
    for (int k = 0; k < 2 * m - 1; ++k) {
      pow_sums[k] += xp;
      if (k < m) r[k] += xp * ys[p];
      xp *= xs[p];
    }
  }
  std::vector<std::vector<double>> A(m, std::vector<double>(m));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) A[i][j] = pow_sums[i + j];
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int i = col + 1; i < m; ++i) {
      if (std::abs(A[i][col]) > std::abs(A[piv][col])) piv = i;
    }
    std::swap(A[col], A[piv]);
    std::swap(r[col], r[piv]);
    if (std::abs(A[col][col]) < 1e-300) continue;
    for (int i = col + 1; i < m; ++i) {
      double f = A[i][col] / A[col][col];
      for (int j = col; j < m; ++j) A[i][j] -= f * A[col][j];
      r[i] -= f * r[col];
    }
  }
  std::vector<double> c(m, 0.0);
  for (int i = m - 1; i >= 0; --i) {
    double s = r[i];
    for (int j = i + 1; j < m; ++j) s -= A[i][j] * c[j];
    c[i] = std::abs(A[i][i]) < 1e-300 ? 0.0 : s / A[i][i];
  }
  return c;
}

double polyval(const std::vector<double>& c, double x) {
  double y = 0.0;
  for (size_t i = c.size(); i-- > 0;) y = y * x + c[i];
  return y;
}

}  // namespace

TimeSeries impute(const TimeSeries& ts, int order, int neighbors) {
  if (order < 0) throw ConfigInvalid("impute order must be >= 0");
  if (neighbors < 1) throw ConfigInvalid("impute neighbors must be >= 1");
  std::vector<int> known;
  for (size_t i = 0; i < ts.size(); ++i) {
    if (ts.values[i].has_value()) known.push_back(static_cast<int>(i));
  }
  if (static_cast<int>(known.size()) < order + 1) {
    throw TooSparse("impute needs at least order+1 non-missing points, have " +
                    std::to_string(known.size()));
  }
  TimeSeries out = ts;
  const int n = static_cast<int>(ts.size());
  int i = 0;
  while (i < n) {
    if (out.values[i].has_value()) {
      ++i;
      continue;
    }
    int gap_start = i;
    while (i < n && !out.values[i].has_value()) ++i;
    int gap_end = i - 1;  // inclusive

    bool leading = gap_start == 0;
    bool trailing = gap_end == n - 1;
    if (leading || trailing) {
      // Nearest-value extension at the edges.
      double v = leading ? *ts.values[known.front()] : *ts.values[known.back()];
      for (int g = gap_start; g <= gap_end; ++g) out.values[g] = v;
      continue;
    }

    // Nearest non-missing neighbors, closest to the gap first.
    auto right = std::lower_bound(known.begin(), known.end(), gap_start);
    auto left = right;  // right points at first index > gap_end
    std::vector<int> picked;
    while (static_cast<int>(picked.size()) < neighbors &&
           (left != known.begin() || right != known.end())) {
      long dl = left != known.begin() ? gap_start - *(left - 1) : LONG_MAX;
      long dr = right != known.end() ? *right - gap_end : LONG_MAX;
      if (dl <= dr) {
        picked.push_back(*--left);
      } else {
        picked.push_back(*right++);
      }
    }
    double center = 0.5 * (gap_start + gap_end);
    std::vector<double> xs, ys;
    for (int k : picked) {
      xs.push_back(static_cast<double>(k) - center);
      ys.push_back(*ts.values[k]);
    }
    std::vector<double> coeff = polyfit(xs, ys, order);
    for (int g = gap_start; g <= gap_end; ++g) {
      out.values[g] = polyval(coeff, static_cast<double>(g) - center);
    }
  }
  return out;
}

namespace {

// Quantile with linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw EmptyColumn("quantile of empty column");
  double h = p * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = static_cast<size_t>(std::ceil(h));
  double w = h - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

}  // namespace

ScalerState fit_robust_scaler(const std::vector<double>& xs) {
  if (xs.empty()) throw EmptyColumn("fit_robust_scaler on empty column");
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  ScalerState s;
  s.median = quantile_sorted(sorted, 0.5);
  double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  s.degenerate = iqr == 0.0;
  s.iqr = s.degenerate ? 1.0 : iqr;
  return s;
}

double scale_value(const ScalerState& s, double x) {
  return (x - s.median) / s.iqr;
}

double unscale_value(const ScalerState& s, double x) {
  return x * s.iqr + s.median;
}

ScaledColumn robust_scale(const std::vector<double>& col) {
  ScaledColumn out;
  out.state = fit_robust_scaler(col);
  out.values.reserve(col.size());
  for (double x : col) out.values.push_back(scale_value(out.state, x));
  return out;
}

TimeFeatures time_features(int64_t t) {
  int64_t sec_of_day = ((t % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  double hour = static_cast<double>(sec_of_day / 3600);
  double minute = static_cast<double>((sec_of_day / 60) % 60);
  constexpr double tau = 2.0 * std::numbers::pi;
  return {std::sin(tau * hour / 24.0), std::cos(tau * hour / 24.0),
          std::sin(tau * minute / 60.0), std::cos(tau * minute / 60.0)};
}

void SplitBounds::validate() const {
  for (const DateRange* r : {&train, &val, &test}) {
    if (r->last_day < r->first_day) {
      throw ConfigInvalid("split range ends before it starts");
    }
  }
  auto check_pair = [](const DateRange& a, const DateRange& b, const char* who) {
    if (b.first_day <= a.last_day) {
      throw OverlappingSplits(std::string("split ranges overlap or are out of order at ") + who);
    }
    int64_t gap_days = (b.first_day - a.last_day) / kSecondsPerDay - 1;
    if (gap_days < 1) {
      throw BufferTooSmall(std::string("need >= 1 buffer day before ") + who);
    }
  };
  check_pair(train, val, "val");
  check_pair(val, test, "test");
}

SplitBounds default_split_bounds() {
  SplitBounds b;
  b.train = {parse_date("2015-06-01"), parse_date("2015-08-02")};
  b.val = {parse_date("2015-08-04"), parse_date("2015-08-20")};
  b.test = {parse_date("2015-08-22"), parse_date("2015-08-31")};
  return b;
}

WindowedDataset chrono_split(const FeatureMatrix& fm, const SplitBounds& bounds,
                             int window_len) {
  bounds.validate();
  if (window_len < 1) throw ConfigInvalid("window_len must be >= 1");
  const int64_t rows = fm.values.dim(0);
  const int f = fm.values.dim(1);

  WindowedDataset ds;
  ds.window_len = window_len;
  ds.feature_names = fm.feature_names;
  ds.scalers = fm.scalers;
  ds.scaled = fm.scaled;

  struct Bucket {
    std::vector<int64_t> starts;
  };
  Bucket buckets[3];
  const DateRange* ranges[3] = {&bounds.train, &bounds.val, &bounds.test};
  for (int64_t i = 0; i + window_len < rows; ++i) {
    int64_t first_min = fm.minute_at(i);
    int64_t target_min = fm.minute_at(i + window_len);
    for (int s = 0; s < 3; ++s) {
      // Containment: first input minute and target minute inside one range
      // implies every minute between them is too.
      if (ranges[s]->contains_minute(first_min) &&
          ranges[s]->contains_minute(target_min)) {
        buckets[s].starts.push_back(i);
        break;
      }
    }
  }

  auto fill = [&](const Bucket& b, SplitData& out) {
    int64_t n = static_cast<int64_t>(b.starts.size());
    if (n == 0) return;
    out.inputs = Tensor({static_cast<int>(n), window_len, f});
    out.targets.resize(static_cast<size_t>(n));
    out.target_times.resize(static_cast<size_t>(n));
    for (int64_t w = 0; w < n; ++w) {
      int64_t i = b.starts[static_cast<size_t>(w)];
      const double* src = fm.values.data() + i * f;
      std::copy(src, src + static_cast<int64_t>(window_len) * f,
                out.inputs.data() + w * window_len * f);
      out.targets[static_cast<size_t>(w)] = fm.targets[static_cast<size_t>(i + window_len)];
      out.target_times[static_cast<size_t>(w)] = fm.minute_at(i + window_len);
    }
  };
  fill(buckets[0], ds.train);
  fill(buckets[1], ds.val);
  fill(buckets[2], ds.test);

  for (const SplitData* s : {&ds.train, &ds.val, &ds.test}) {
    if (!s->inputs.empty() && !s->inputs.all_finite()) {
      throw NumericError("windowed inputs contain non-finite values");
    }
    for (double t : s->targets) {
      if (t < 0.0 || !std::isfinite(t)) {
        throw NumericError("windowed targets must be finite and >= 0");
      }
    }
  }
  return ds;
}

WindowedDataset build_dataset(const std::vector<LinkRecord>& links,
                              const GaugeRecord& gauge,
                              const PreprocessConfig& cfg) {
  if (links.empty()) throw MissingInput("build_dataset: no links");
  cfg.split.validate();

  // Per-link 1-min imputed RSL.
  std::vector<TimeSeries> rsl;
  std::vector<std::string> names;
  std::set<std::string> used;
  for (const auto& link : links) {
    TimeSeries one_min =
        link.rsl.step_s == 60 ? link.rsl : downsample_rsl(link.rsl);
    rsl.push_back(impute(one_min, cfg.impute_order, cfg.impute_neighbors));
    std::string name = "rsl_" + link.meta.link_id;
    while (used.count(name)) name += "_dup";
    used.insert(name);
    names.push_back(name);
  }

  // Target: impute accumulations, convert, clamp at 0.
  GaugeRecord filled = gauge;
  filled.series = impute(gauge.series, cfg.impute_order, cfg.impute_neighbors);
  for (auto& v : filled.series.values) {
    if (*v < 0.0) v = 0.0;
  }
  TimeSeries rate = gauge_to_rate(filled, cfg.smooth_window_min);

  // Common 1-min grid.
  int64_t start = rate.start;
  int64_t end = rate.start + static_cast<int64_t>(rate.size()) * 60;
  for (const auto& ts : rsl) {
    start = std::max(start, ts.start);
    end = std::min(end, ts.start + static_cast<int64_t>(ts.size()) * 60);
  }
  if (end <= start) throw DataError("build_dataset: series do not overlap");
  for (const auto& ts : rsl) {
    if ((start - ts.start) % 60 != 0) {
      throw DataError("build_dataset: link grid offset is not whole minutes");
    }
  }
  const int64_t rows = (end - start) / 60;
  const int n_links = static_cast<int>(rsl.size());
  const int f = n_links + 4;

  FeatureMatrix fm;
  fm.start = start;
  fm.feature_names = names;
  fm.feature_names.insert(fm.feature_names.end(),
                          {"x_sin_hour", "x_cos_hour", "x_sin_min", "x_cos_min"});
  fm.values = Tensor({static_cast<int>(rows), f});
  fm.targets.resize(static_cast<size_t>(rows));
  fm.scalers.assign(static_cast<size_t>(f), ScalerState{});
  fm.scaled.assign(static_cast<size_t>(f), false);

  for (int64_t r = 0; r < rows; ++r) {
    int64_t t = start + r * 60;
    double* row = fm.values.data() + r * f;
    for (int c = 0; c < n_links; ++c) {
      row[c] = *rsl[static_cast<size_t>(c)].values[static_cast<size_t>(
          (t - rsl[static_cast<size_t>(c)].start) / 60)];
    }
    TimeFeatures tf = time_features(t);
    row[n_links + 0] = tf.sin_hour;
    row[n_links + 1] = tf.cos_hour;
    row[n_links + 2] = tf.sin_min;
    row[n_links + 3] = tf.cos_min;
    fm.targets[static_cast<size_t>(r)] =
        *rate.values[static_cast<size_t>((t - rate.start) / 60)];
  }

  // Scalers are fitted on train rows only and applied everywhere. The time
  // encodings are already bounded and stay raw.
  std::vector<double> train_col;
  for (int c = 0; c < n_links; ++c) {
    train_col.clear();
    for (int64_t r = 0; r < rows; ++r) {
      if (cfg.split.train.contains_minute(start + r * 60)) {
        train_col.push_back(fm.values.data()[r * f + c]);
      }
    }
    if (train_col.empty()) {
      throw EmptySplit("no train rows to fit the scaler for column " +
                       fm.feature_names[static_cast<size_t>(c)]);
    }
    ScalerState s = fit_robust_scaler(train_col);
    for (int64_t r = 0; r < rows; ++r) {
      double& x = fm.values.data()[r * f + c];
      x = scale_value(s, x);
    }
    fm.scalers[static_cast<size_t>(c)] = s;
    fm.scaled[static_cast<size_t>(c)] = true;

    // Guard: the stored state must match a train-only refit of the raw
    // column (reconstructed via the inverse transform).
    std::vector<double> check;
    for (int64_t r = 0; r < rows; ++r) {
      if (cfg.split.train.contains_minute(start + r * 60)) {
        check.push_back(unscale_value(s, fm.values.data()[r * f + c]));
      }
    }
    ScalerState refit = fit_robust_scaler(check);
    if (std::abs(refit.median - s.median) > 1e-9 * std::max(1.0, std::abs(s.median)) ||
        std::abs(refit.iqr - s.iqr) > 1e-9 * std::max(1.0, s.iqr)) {
      throw NumericError("scaler state does not match a train-only fit");
    }
  }

  return chrono_split(fm, cfg.split, cfg.window_len);
}

}  // namespace cmlrain
