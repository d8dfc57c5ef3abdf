#include <benchmark/benchmark.h>

#include "cmlrain/model.hpp"
#include "cmlrain/rng.hpp"

using namespace cmlrain;

namespace {

ModelSpec paper_scale(ModelKind kind) {
  ModelSpec s;
  s.kind = kind;
  s.d_model = 64;
  s.n_heads = 4;
  s.n_encoder_layers = 3;
  s.gru_hidden = 64;
  s.gru_layers = 1;
  s.dropout = 0.0;
  s.window_len = 30;
  s.n_features = 7;
  return s;
}

ad::NodePtr random_batch(int b, const ModelSpec& s, uint64_t seed) {
  Rng rng(seed);
  Tensor t({b, s.window_len, s.n_features});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, 1.0);
  return ad::constant(t);
}

void BM_ForwardTabGRU(benchmark::State& state) {
  ModelSpec s = paper_scale(ModelKind::TabGRU);
  ModelParams p = init_params(s, 1);
  ad::NodePtr x = random_batch(static_cast<int>(state.range(0)), s, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_forward(p, x, false)->value.data());
  }
}
BENCHMARK(BM_ForwardTabGRU)->Arg(1)->Arg(32);

void BM_ForwardBaselines(benchmark::State& state) {
  ModelKind kind = static_cast<ModelKind>(state.range(0));
  ModelSpec s = paper_scale(kind);
  ModelParams p = init_params(s, 3);
  ad::NodePtr x = random_batch(32, s, 4);
  state.SetLabel(kind_name(kind));
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_forward(p, x, false)->value.data());
  }
}
BENCHMARK(BM_ForwardBaselines)
    ->Arg(static_cast<int>(ModelKind::GRU))
    ->Arg(static_cast<int>(ModelKind::BiGRU))
    ->Arg(static_cast<int>(ModelKind::Transformer))
    ->Arg(static_cast<int>(ModelKind::TransGRU));

void BM_TrainStepTabGRU(benchmark::State& state) {
  ModelSpec s = paper_scale(ModelKind::TabGRU);
  s.d_model = 16;
  s.gru_hidden = 16;
  s.n_encoder_layers = 1;
  ModelParams p = init_params(s, 5);
  ad::NodePtr x = random_batch(32, s, 6);
  Rng rng(7);
  Tensor targets({32});
  for (int i = 0; i < 32; ++i) targets[i] = std::max(0.0, rng.normal(1.0, 1.0));
  ad::NodePtr y = ad::constant(targets);
  for (auto _ : state) {
    ad::NodePtr diff = ad::sub(model_forward(p, x, false), y);
    ad::NodePtr loss = ad::mean_all(ad::mul(diff, diff));
    p.zero_grad();
    ad::backward(loss);
    benchmark::DoNotOptimize(loss->value[0]);
  }
}
BENCHMARK(BM_TrainStepTabGRU);

}  // namespace
