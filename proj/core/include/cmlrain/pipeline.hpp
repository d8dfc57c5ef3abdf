#pragma once

#include <string>
#include <vector>

#include "cmlrain/dataset.hpp"
#include "cmlrain/eval.hpp"
#include "cmlrain/run_config.hpp"
#include "cmlrain/synth.hpp"

namespace cmlrain {

// Plain "time,rate_mm_h" CSV used to exchange estimates between the
// evaluate / compare-pl / detect-events stages.
void write_rate_csv(const std::string& path, const TimeSeries& ts);
TimeSeries read_rate_csv(const std::string& path);

// Scaled-down analog of the chronological protocol for synthetic runs of
// arbitrary length: test ~12%, val ~18%, one buffer day before each, train
// the rest. Needs days >= 6.
SplitBounds synthetic_split_bounds(int64_t start_time, int days);

struct DataBundle {
  std::vector<LinkRecord> links;
  GaugeRecord gauge;
};

// Reads link_*.csv and the first gauge_*.csv from a directory.
DataBundle load_data_dir(const std::string& dir, const std::string& column_map = "");
// Writes a synthetic dataset in the same layout (plus truth_rate.csv).
void write_data_dir(const std::string& dir, const SynthDataset& ds);

// Per-link 1-min RSL: downsampled when needed, then imputed.
std::vector<TimeSeries> links_to_1min(const std::vector<LinkRecord>& links,
                                      const PreprocessConfig& cfg);

// Whole-site physics estimate on the common 1-min grid.
TimeSeries pl_site_estimate(const DataBundle& data, const PreprocessConfig& pre,
                            const PLConfig& pl);

WindowedDataset run_preprocess(const RunConfig& cfg, bool synthetic,
                               const std::string& out_dir);

struct ReproduceResult {
  std::vector<EvalReport> reports;  // one per trained model, plus "PL"
};

// End-to-end chronological protocol on synthetic or on-disk data: build the
// dataset, train every requested architecture, evaluate on the test split,
// run the physics baseline over the same minutes, and emit the combined
// report plus run.json into cfg.out_dir.
ReproduceResult run_reproduce(const RunConfig& cfg, bool synthetic);

}  // namespace cmlrain
