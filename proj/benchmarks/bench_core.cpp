#include <benchmark/benchmark.h>

#include "rrglab/ensemble.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/lanczos.hpp"
#include "rrglab/metrics.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"

namespace {

using namespace rrg;

void BM_SampleRegularGraph(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_regular_graph(n, 3, seed++));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_SampleRegularGraph)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_ConstrainedGoe(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_constrained_goe(n, seed++));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_ConstrainedGoe)->RangeMultiplier(2)->Range(256, 2048)->Complexity();

void BM_EvolveExact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CenteredMatrix h0 = build_centered_adjacency(sample_regular_graph(n, 3, 1));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evolve_exact(h0, 0.1, seed++));
  }
}
BENCHMARK(BM_EvolveExact)->RangeMultiplier(2)->Range(256, 2048);

void BM_Decompose(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CenteredMatrix h = build_centered_adjacency(sample_regular_graph(n, 3, 1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decompose(h));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Decompose)->RangeMultiplier(2)->Range(256, 2048)->Complexity()
    ->Unit(benchmark::kMillisecond);

void BM_NonconstraintEigenvalues(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CenteredMatrix h = build_centered_adjacency(sample_regular_graph(n, 3, 1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(nonconstraint_eigenvalues(h));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_NonconstraintEigenvalues)->RangeMultiplier(2)->Range(256, 2048)
    ->Unit(benchmark::kMillisecond);

void BM_LanczosTopGraph(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RegularGraph g = sample_regular_graph(n, 3, 1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(topk_graph(g, 3, seed++));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_LanczosTopGraph)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_KsDistance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Engine rng = make_engine(3);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (auto& v : x) v = normal(rng);
  const EcdfSummary ecdf = make_ecdf(x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ks_distance_to_normal(ecdf));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_KsDistance)->RangeMultiplier(8)->Range(1024, 65536)->Complexity();

}  // namespace

BENCHMARK_MAIN();
