#include "cmlrain/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cmlrain/errors.hpp"
#include "cmlrain/ingest.hpp"
#include "cmlrain/pl_model.hpp"
#include "cmlrain/report.hpp"

namespace cmlrain {

namespace fs = std::filesystem;

void write_rate_csv(const std::string& path, const TimeSeries& ts) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write " + path);
  f << "time,rate_mm_h\n";
  char buf[40];
  for (size_t i = 0; i < ts.size(); ++i) {
    f << format_iso8601(ts.time_at(i)) << ",";
    if (ts.values[i]) {
      std::snprintf(buf, sizeof(buf), "%.17g", *ts.values[i]);
      f << buf;
    }
    f << "\n";
  }
}

TimeSeries read_rate_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw EmptyFile(path);
  TimeSeries ts;
  ts.unit = Unit::mm_per_h;
  std::vector<int64_t> times;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos) throw MalformedHeader(path + ": bad row");
    times.push_back(parse_iso8601(line.substr(0, comma)));
    std::string cell = line.substr(comma + 1);
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    if (cell.empty()) {
      ts.values.emplace_back(std::nullopt);
    } else {
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc()) throw MalformedHeader(path + ": bad value " + cell);
      (void)p;
      ts.values.emplace_back(v);
    }
  }
  if (times.empty()) throw EmptyFile(path);
  ts.start = times.front();
  ts.step_s = times.size() > 1 ? static_cast<int>(times[1] - times[0]) : 60;
  for (size_t i = 1; i < times.size(); ++i) {
    if (times[i] <= times[i - 1]) throw NonMonotonicTimestamps(path);
    if (times[i] - times[i - 1] != ts.step_s) {
      throw MalformedHeader(path + ": non-uniform sampling");
    }
  }
  return ts;
}

SplitBounds synthetic_split_bounds(int64_t start_time, int days) {
  int test_days = std::max<int>(1, static_cast<int>(std::llround(0.12 * days)));
  int val_days = std::max<int>(1, static_cast<int>(std::llround(0.18 * days)));
  int train_days = days - 2 - val_days - test_days;
  if (train_days < 1) {
    throw ConfigInvalid("synthetic runs need >= 6 days for the chronological "
                        "protocol, got " + std::to_string(days));
  }
  int64_t d0 = day_floor(start_time);
  SplitBounds b;
  b.train = {d0, d0 + (train_days - 1) * kSecondsPerDay};
  int64_t val_start = d0 + (train_days + 1) * kSecondsPerDay;
  b.val = {val_start, val_start + (val_days - 1) * kSecondsPerDay};
  int64_t test_start = val_start + (val_days + 1) * kSecondsPerDay;
  b.test = {test_start, test_start + (test_days - 1) * kSecondsPerDay};
  b.validate();
  return b;
}

DataBundle load_data_dir(const std::string& dir, const std::string& column_map) {
  if (!fs::is_directory(dir)) throw MissingInput("not a directory: " + dir);
  ColumnMap cols;
  if (!column_map.empty()) cols = load_column_map(column_map);
  DataBundle out;
  std::vector<std::string> link_files, gauge_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.starts_with("link_") && name.ends_with(".csv")) {
      link_files.push_back(entry.path().string());
    } else if (name.starts_with("gauge") && name.ends_with(".csv")) {
      gauge_files.push_back(entry.path().string());
    }
  }
  std::sort(link_files.begin(), link_files.end());
  std::sort(gauge_files.begin(), gauge_files.end());
  if (link_files.empty()) throw MissingInput("no link_*.csv in " + dir);
  if (gauge_files.empty()) throw MissingInput("no gauge*.csv in " + dir);
  for (const auto& f : link_files) out.links.push_back(parse_link_csv(f, cols));
  out.gauge = parse_gauge_csv(gauge_files.front(), cols);
  return out;
}

void write_data_dir(const std::string& dir, const SynthDataset& ds) {
  fs::create_directories(dir);
  for (const auto& link : ds.links) {
    write_link_csv(dir + "/link_" + link.meta.link_id + ".csv", link);
  }
  write_gauge_csv(dir + "/gauge_" + ds.gauge.gauge_id + ".csv", ds.gauge);
  write_rate_csv(dir + "/truth_rate.csv", ds.true_rain);
}

std::vector<TimeSeries> links_to_1min(const std::vector<LinkRecord>& links,
                                      const PreprocessConfig& cfg) {
  std::vector<TimeSeries> out;
  out.reserve(links.size());
  for (const auto& link : links) {
    TimeSeries one_min =
        link.rsl.step_s == 60 ? link.rsl : downsample_rsl(link.rsl);
    out.push_back(impute(one_min, cfg.impute_order, cfg.impute_neighbors));
  }
  return out;
}

TimeSeries pl_site_estimate(const DataBundle& data, const PreprocessConfig& pre,
                            const PLConfig& pl) {
  std::vector<TimeSeries> rsl = links_to_1min(data.links, pre);
  // Clip everything to the common grid.
  int64_t start = rsl[0].start, end = rsl[0].start + 60 * static_cast<int64_t>(rsl[0].size());
  for (const auto& ts : rsl) {
    start = std::max(start, ts.start);
    end = std::min(end, ts.start + 60 * static_cast<int64_t>(ts.size()));
  }
  std::vector<TimeSeries> clipped;
  std::vector<LinkMeta> metas;
  for (size_t i = 0; i < rsl.size(); ++i) {
    TimeSeries c;
    c.start = start;
    c.step_s = 60;
    c.unit = rsl[i].unit;
    size_t lo = static_cast<size_t>((start - rsl[i].start) / 60);
    size_t n = static_cast<size_t>((end - start) / 60);
    c.values.assign(rsl[i].values.begin() + static_cast<int64_t>(lo),
                    rsl[i].values.begin() + static_cast<int64_t>(lo + n));
    clipped.push_back(std::move(c));
    metas.push_back(data.links[i].meta);
  }
  return pl_estimate(metas, clipped, pl);
}

WindowedDataset run_preprocess(const RunConfig& cfg, bool synthetic,
                               const std::string& out_dir) {
  DataBundle data;
  PreprocessConfig pre = cfg.preprocess;
  if (synthetic) {
    SynthDataset sd = synth_dataset(cfg.seed, cfg.synth);
    data.links = std::move(sd.links);
    data.gauge = std::move(sd.gauge);
    pre.split = synthetic_split_bounds(cfg.synth.start_time, cfg.synth.days);
  } else {
    data = load_data_dir(cfg.data_dir);
  }
  WindowedDataset ds = build_dataset(data.links, data.gauge, pre);
  if (!out_dir.empty()) save_dataset(out_dir, ds);
  return ds;
}

ReproduceResult run_reproduce(const RunConfig& cfg_in, bool synthetic) {
  RunConfig cfg = cfg_in;
  DataBundle data;
  if (synthetic) {
    SynthDataset sd = synth_dataset(cfg.seed, cfg.synth);
    data.links = std::move(sd.links);
    data.gauge = std::move(sd.gauge);
    cfg.preprocess.split = synthetic_split_bounds(cfg.synth.start_time, cfg.synth.days);
  } else {
    data = load_data_dir(cfg.data_dir);
  }

  fs::create_directories(cfg.out_dir);
  WindowedDataset ds = build_dataset(data.links, data.gauge, cfg.preprocess);
  save_dataset(cfg.out_dir + "/dataset", ds);
  if (ds.test.count() == 0) throw EmptySplit("test split is empty");

  std::vector<ModelKind> kinds;
  if (cfg.models.empty()) {
    kinds = all_model_kinds();
  } else {
    for (const auto& name : cfg.models) kinds.push_back(kind_from_name(name));
  }

  ReproduceResult result;
  for (ModelKind kind : kinds) {
    ModelSpec spec = cfg.model;
    spec.kind = kind;
    spec.window_len = ds.window_len;
    spec.n_features = ds.n_features();
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    TrainResult tr = train_model(spec, ds, tc);
    save_checkpoint(cfg.out_dir + "/" + kind_name(kind) + ".ckpt", tr.params);
    write_history_csv(cfg.out_dir + "/" + kind_name(kind) + "_history.csv",
                      tr.history);
    std::vector<double> pred = predict(tr.params, ds.test);
    result.reports.push_back(evaluate_series(kind_name(kind), ds.test.targets,
                                             pred, ds.test.target_times));
  }

  // Physics baseline over the same test minutes.
  TimeSeries pl_series = pl_site_estimate(data, cfg.preprocess, cfg.pl);
  std::vector<double> pl_pred;
  pl_pred.reserve(ds.test.target_times.size());
  for (int64_t t : ds.test.target_times) {
    int64_t idx = (t - pl_series.start) / 60;
    if (idx < 0 || idx >= static_cast<int64_t>(pl_series.size())) {
      throw DataError("PL series does not cover test minute");
    }
    pl_pred.push_back(*pl_series.values[static_cast<size_t>(idx)]);
  }
  result.reports.push_back(
      evaluate_series("PL", ds.test.targets, pl_pred, ds.test.target_times));

  emit_combined_report(result.reports, cfg.out_dir);
  save_run_config(cfg.out_dir + "/run.json", cfg);
  return result;
}

}  // namespace cmlrain
