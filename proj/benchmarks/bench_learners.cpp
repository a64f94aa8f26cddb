#include "defectlab/dataset.hpp"
#include "defectlab/learners.hpp"
#include "defectlab/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace defectlab;

namespace {

const Dataset& training_data() {
  static const Dataset data = [] {
    SyntheticConfig s;
    s.seed = 9;
    const Dataset d = select_mode(generate_project(s, "bench"), Mode::process);
    return preprocess(d, d).first;
  }();
  return data;
}

void BM_Fit(benchmark::State& state) {
  ModelSpec spec;
  spec.kind = static_cast<LearnerKind>(state.range(0));
  spec.seed = 1;
  const auto& d = training_data();
  for (auto _ : state) benchmark::DoNotOptimize(fit(spec, d));
  state.SetLabel(to_string(spec.kind));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_Fit)
    ->Arg(static_cast<int>(LearnerKind::nb))
    ->Arg(static_cast<int>(LearnerKind::lr))
    ->Arg(static_cast<int>(LearnerKind::svm))
    ->Arg(static_cast<int>(LearnerKind::rf))
    ->Unit(benchmark::kMillisecond);

void BM_ForestScore(benchmark::State& state) {
  ModelSpec spec;
  spec.seed = 1;
  const auto& d = training_data();
  const Model model = fit(spec, d);
  for (auto _ : state) benchmark::DoNotOptimize(score_all(model, d.X));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_ForestScore)->Unit(benchmark::kMicrosecond);

void BM_Smote(benchmark::State& state) {
  const auto& d = training_data();
  for (auto _ : state) benchmark::DoNotOptimize(smote(d, {5, 3}));
}
BENCHMARK(BM_Smote)->Unit(benchmark::kMicrosecond);

}  // namespace
