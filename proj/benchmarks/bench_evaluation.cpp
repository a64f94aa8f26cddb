#include "defectlab/evaluation.hpp"
#include "defectlab/random.hpp"
#include "defectlab/stats.hpp"

#include <benchmark/benchmark.h>

using namespace defectlab;

namespace {

struct Scored {
  std::vector<double> scores, effort;
  std::vector<int> y;
};

Scored scored(std::size_t n) {
  Rng rng(n);
  Scored s;
  for (std::size_t i = 0; i < n; ++i) {
    s.scores.push_back(rng.uniform());
    s.y.push_back(rng.uniform() < 0.2);
    s.effort.push_back(1 + static_cast<double>(rng.index(400)));
  }
  return s;
}

void BM_Auc(benchmark::State& state) {
  const auto s = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(auc(s.scores, s.y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auc)->RangeMultiplier(4)->Range(64, 65536)->Complexity();

void BM_Popt20(benchmark::State& state) {
  const auto s = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(popt20(s.scores, s.y, s.effort));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Popt20)->RangeMultiplier(4)->Range(64, 65536)->Complexity();

void BM_ScottKnott(benchmark::State& state) {
  Rng rng(4);
  std::vector<RankGroup> groups;
  for (int g = 0; g < state.range(0); ++g) {
    std::vector<double> v(30);
    for (auto& x : v) x = 0.3 * g + rng.normal();
    groups.push_back({"g" + std::to_string(g), v});
  }
  for (auto _ : state) benchmark::DoNotOptimize(scott_knott(groups, 1));
}
BENCHMARK(BM_ScottKnott)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace
