#include <benchmark/benchmark.h>

#include "cmlrain/eval.hpp"
#include "cmlrain/pl_model.hpp"
#include "cmlrain/preprocess.hpp"
#include "cmlrain/rng.hpp"
#include "cmlrain/synth.hpp"

using namespace cmlrain;

namespace {

void BM_SynthDay(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth_dataset(7, 1).links.size());
  }
}
BENCHMARK(BM_SynthDay);

void BM_DownsampleDay(benchmark::State& state) {
  SynthDataset sd = synth_dataset(7, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(downsample_rsl(sd.links[0].rsl).size());
  }
}
BENCHMARK(BM_DownsampleDay);

void BM_PlEstimateDay(benchmark::State& state) {
  SynthDataset sd = synth_dataset(7, 1);
  std::vector<LinkMeta> metas;
  std::vector<TimeSeries> rsl;
  for (const auto& link : sd.links) {
    metas.push_back(link.meta);
    rsl.push_back(impute(downsample_rsl(link.rsl), 2));
  }
  PLConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pl_estimate(metas, rsl, cfg).size());
  }
}
BENCHMARK(BM_PlEstimateDay);

void BM_DetectEventsWeek(benchmark::State& state) {
  SynthDataset sd = synth_dataset(9, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect_events(sd.true_rain).size());
  }
}
BENCHMARK(BM_DetectEventsWeek);

void BM_MetricsWeek(benchmark::State& state) {
  Rng rng(11);
  std::vector<double> y, yhat;
  for (int i = 0; i < 7 * 1440; ++i) {
    y.push_back(std::max(0.0, rng.normal(0.5, 1.0)));
    yhat.push_back(std::max(0.0, rng.normal(0.5, 1.0)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics(y, yhat).rmse);
  }
}
BENCHMARK(BM_MetricsWeek);

}  // namespace

BENCHMARK_MAIN();
