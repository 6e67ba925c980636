#include <benchmark/benchmark.h>

#include <vector>

#include "jetflow/charts.hpp"
#include "jetflow/dtensor.hpp"
#include "jetflow/geometry.hpp"
#include "jetflow/rng.hpp"
#include "jetflow/sampling.hpp"

using namespace jetflow;

namespace {

void BM_ChristoffelSphere(benchmark::State& state) {
  const Metric g = catalog_metric("sphere", Factor::spatial, 2);
  const std::vector<double> x{0.9, 0.4};
  for (auto _ : state) benchmark::DoNotOptimize(christoffel(g, x));
}
BENCHMARK(BM_ChristoffelSphere);

void BM_ChristoffelEuclidean3(benchmark::State& state) {
  const Metric g = catalog_metric("euclidean", Factor::spatial, 3);
  const std::vector<double> x{0.9, 0.4, 1.2};
  for (auto _ : state) benchmark::DoNotOptimize(christoffel(g, x));
}
BENCHMARK(BM_ChristoffelEuclidean3);

// One is_dtensor call over changes x jets pairs for the Hessian metric of
// the energy Lagrangian; range(0) is the number of jets.
void BM_TensorialityHessian(benchmark::State& state) {
  const Metric h = catalog_metric("exp1d", Factor::temporal, 1);
  const Metric phi = catalog_metric("sphere", Factor::spatial, 2);
  const Box t_box = uniform_box(1, -0.5, 0.8), x_box = uniform_box(2, 0.4, 1.4);
  Rng rng(7);
  const auto changes = charts::suite(rng, 1, 2, 10, t_box, x_box, "bench");
  const auto jets = sample_jets(rng, static_cast<int>(state.range(0)), t_box, x_box);
  const DTensorField f = lagrangian_metric_field(energy_lagrangian(h, phi), 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(is_dtensor(f, changes, jets, 1e-8));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(changes.size() * jets.size()));
}
BENCHMARK(BM_TensorialityHessian)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace
