#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "toolmotion/features.hpp"
#include "toolmotion/geometry.hpp"
#include "toolmotion/svm.hpp"

using namespace toolmotion;

namespace {

std::vector<Vec2> cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 10.0);
  std::vector<Vec2> out(n);
  for (Vec2& p : out) p = {d(rng), d(rng)};
  return out;
}

void BM_ConvexHull(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(convex_hull(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvexHull)->RangeMultiplier(4)->Range(16, 16384)->Complexity();

void BM_SearchGraph(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(coverage_rate(build_search_graph(pts, std::vector<double>{})));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SearchGraph)->RangeMultiplier(2)->Range(16, 512)->Complexity();

void BM_MedianFilter(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (double& v : x) v = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(median_filter(x, 5));
}
BENCHMARK(BM_MedianFilter)->Range(64, 65536);

void BM_SvmTrain(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> x(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    x[i] = {d(rng) + 0.8 * y[i], d(rng), d(rng) - 0.5 * y[i]};
  }
  for (auto _ : state) benchmark::DoNotOptimize(train_svm(x, y, SvmParams{}));
}
BENCHMARK(BM_SvmTrain)->RangeMultiplier(2)->Range(16, 256);

}  // namespace
