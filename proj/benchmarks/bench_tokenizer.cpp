#include "defectlab/product_metrics.hpp"
#include "defectlab/tokenizer.hpp"

#include <benchmark/benchmark.h>

#include <string>

using namespace defectlab;

namespace {

std::string java_source(int methods) {
  std::string src = "package app;\n\nimport java.util.List;\n\n/** Generated. */\npublic class Big {\n"
                    "  private int total;\n  static int created = 0;\n";
  for (int m = 0; m < methods; ++m) {
    src += "  // method " + std::to_string(m) + "\n";
    src += "  public int m" + std::to_string(m) + "(int a, List<String> xs) {\n";
    src += "    for (String x : xs) {\n      if (x.isEmpty() && a > 0) { total += a; }\n"
           "      else if (x.length() > 3 || a < 0) { total -= 1; }\n    }\n";
    src += "    switch (a) { case 1: return 1; case 2: return 2; default: break; }\n";
    src += "    String s = \"text with // no comment\";\n    return a > 0 ? total : -total;\n  }\n\n";
  }
  return src + "}\n";
}

void BM_Tokenize(benchmark::State& state) {
  const std::string src = java_source(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(src));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(src.size()));
}
BENCHMARK(BM_Tokenize)->Arg(10)->Arg(100)->Arg(1000);

void BM_MeasureSource(benchmark::State& state) {
  const std::string src = java_source(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(measure_source(src));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(src.size()));
}
BENCHMARK(BM_MeasureSource)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace
