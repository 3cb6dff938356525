#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "streamann/dataset.hpp"
#include "streamann/distance.hpp"
#include "streamann/graph.hpp"
#include "streamann/updates.hpp"

namespace {

using namespace streamann;

constexpr std::size_t kDim = 16;

const Dataset& points() {
  static const Dataset d = GaussianMixture::make(kDim, 8, 1).sample(20000, 1);
  return d;
}

const Dataset& queries() {
  static const Dataset q = GaussianMixture::make(kDim, 8, 1).sample(256, 2);
  return q;
}

void BM_SquaredL2(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::vector<float> a(dim, 0.5f), b(dim, 0.25f);
  for (auto _ : state) benchmark::DoNotOptimize(squared_l2(a.data(), b.data(), dim));
}
BENCHMARK(BM_SquaredL2)->Arg(16)->Arg(128)->Arg(960);

void BM_InnerProduct(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::vector<float> a(dim, 0.5f), b(dim, 0.25f);
  for (auto _ : state) benchmark::DoNotOptimize(inner_product(a.data(), b.data(), dim));
}
BENCHMARK(BM_InnerProduct)->Arg(16)->Arg(128)->Arg(960);

void BM_Insert(benchmark::State& state) {
  for (auto _ : state) {
    Graph g(points(), 32);
    for (VectorId i = 0; i < 5000; ++i) g.insert(i, {32, 64, 1.2f});
    benchmark::DoNotOptimize(g.max_degree());
  }
  state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_Insert)->Unit(benchmark::kMillisecond);

void BM_Search(benchmark::State& state) {
  static const Graph g = [] {
    Graph built(points(), 32);
    for (VectorId i = 0; i < points().count(); ++i) built.insert(i, {32, 64, 1.2f});
    return built;
  }();
  const auto beam = static_cast<std::size_t>(state.range(0));
  VectorId q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.search(queries().row(q), 10, beam));
    q = (q + 1) % static_cast<VectorId>(queries().count());
  }
}
BENCHMARK(BM_Search)->Arg(16)->Arg(64)->Arg(256);

void BM_InplaceDelete(benchmark::State& state) {
  const std::size_t n = 5000;
  std::vector<VectorId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
  for (auto _ : state) {
    state.PauseTiming();
    StreamingIndex index(points(), {32, 64, 1.2f}, DeleteRegime::kInPlace, {64, 50, 3, 1.2f},
                         {0.2}, 7);
    for (VectorId i = 0; i < n; ++i) index.insert(i);
    state.ResumeTiming();
    for (std::size_t i = 0; i < 500; ++i) index.inplace_delete(order[i]);
  }
  state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_InplaceDelete)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
