#include <benchmark/benchmark.h>

#include "cmlrain/autodiff.hpp"
#include "cmlrain/rng.hpp"

using namespace cmlrain;

namespace {

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, 1.0);
  return t;
}

void BM_MatmulSquare(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  ad::NodePtr a = ad::constant(random_tensor({n, n}, 1));
  ad::NodePtr b = ad::constant(random_tensor({n, n}, 2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ad::matmul(a, b)->value.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_MatmulSquare)->Arg(16)->Arg(64)->Arg(128);

void BM_BatchedAttentionShape(benchmark::State& state) {
  // [B x L x dk] x [B x dk x L], the inner product of one attention head.
  ad::NodePtr q = ad::constant(random_tensor({64, 30, 16}, 3));
  ad::NodePtr k = ad::constant(random_tensor({64, 30, 16}, 4));
  for (auto _ : state) {
    ad::NodePtr s = ad::matmul(q, ad::transpose(k, 1, 2));
    benchmark::DoNotOptimize(ad::softmax(s, 2)->value.data());
  }
}
BENCHMARK(BM_BatchedAttentionShape);

void BM_BackwardChain(benchmark::State& state) {
  ad::NodePtr w1 = ad::param(random_tensor({64, 64}, 5));
  ad::NodePtr w2 = ad::param(random_tensor({64, 64}, 6));
  ad::NodePtr x = ad::constant(random_tensor({128, 64}, 7));
  for (auto _ : state) {
    ad::NodePtr loss =
        ad::mean_all(ad::tanh(ad::matmul(ad::relu(ad::matmul(x, w1)), w2)));
    w1->zero_grad();
    w2->zero_grad();
    ad::backward(loss);
    benchmark::DoNotOptimize(w1->grad.data());
  }
}
BENCHMARK(BM_BackwardChain);

}  // namespace
