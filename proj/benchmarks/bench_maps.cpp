#include <benchmark/benchmark.h>

#include <cmath>

#include "jetflow/maps.hpp"

using namespace jetflow;

namespace {

// Damped Jacobi to convergence on [0,1]^2 into the sphere; range(0) = m,
// range(1) = workers.
void BM_GridSweep(benchmark::State& state) {
  const Metric h = catalog_metric("euclidean", Factor::temporal, 2);
  const Metric phi = catalog_metric("sphere", Factor::spatial, 2);
  const MultiTimeSpray s{canonical_temporal(h, 2), canonical_spatial(phi, 2)};
  const BoundaryData bd = [](double a, double b) { return Eigen::Vector2d(1.2 + 0.2 * a * b, 0.3 * a - 0.1 * b * b); };
  GridOptions o;
  o.m = static_cast<int>(state.range(0));
  o.workers = static_cast<int>(state.range(1));
  o.tol = 1e-8;
  int iterations = 0;
  for (auto _ : state) {
    const GridMap g = solve_harmonic_grid(s, h, bd, 2, o);
    iterations = g.iterations;
    benchmark::DoNotOptimize(g.final_residual);
  }
  state.counters["sweeps"] = iterations;
}
BENCHMARK(BM_GridSweep)->Args({9, 1})->Args({17, 1})->Args({17, 2})->Unit(benchmark::kMillisecond);

void BM_GeodesicPeriod(benchmark::State& state) {
  const Metric h = catalog_metric("euclidean", Factor::temporal, 1);
  const Metric phi = catalog_metric("sphere", Factor::spatial, 2);
  const MultiTimeSpray s{canonical_temporal(h, 2), canonical_spatial(phi, 1)};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        solve_affine_ode(s, Eigen::Vector2d(M_PI / 2, 0.0), Eigen::Vector2d(-0.56, 0.83), 0.0, 2 * M_PI, 1e-3));
}
BENCHMARK(BM_GeodesicPeriod)->Unit(benchmark::kMillisecond);

}  // namespace
