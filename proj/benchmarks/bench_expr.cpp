#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "jetflow/expr.hpp"

using namespace jetflow;

namespace {

const char* kSource = "exp(2*t1) * (x1_1^2 + sin(x1)^2 * x2_1^2) - 0.5*log(1 + x2^2)";
const std::vector<std::string> kVars{"t1", "x1", "x2", "x1_1", "x2_1"};

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(parse(kSource));
}
BENCHMARK(BM_Parse);

void BM_TreeEval(benchmark::State& state) {
  const Expr e = parse(kSource);
  const Bindings env{{"t1", 0.3}, {"x1", 0.9}, {"x2", 1.1}, {"x1_1", 0.2}, {"x2_1", -0.4}};
  for (auto _ : state) benchmark::DoNotOptimize(eval(e, env));
}
BENCHMARK(BM_TreeEval);

void BM_CompiledEval(benchmark::State& state) {
  const CompiledExpr c(parse(kSource), kVars);
  const std::vector<double> z{0.3, 0.9, 1.1, 0.2, -0.4};
  for (auto _ : state) benchmark::DoNotOptimize(c(z));
}
BENCHMARK(BM_CompiledEval);

void BM_Differentiate(benchmark::State& state) {
  const Expr e = parse(kSource);
  for (auto _ : state) benchmark::DoNotOptimize(diff(e, "x1"));
}
BENCHMARK(BM_Differentiate);

}  // namespace
