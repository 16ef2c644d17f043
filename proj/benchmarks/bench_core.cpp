#include <benchmark/benchmark.h>

#include <cmath>

#include "dampwave/solver.hpp"
#include "dampwave/well.hpp"

using namespace dampwave;

namespace {

Domain square(int n) { return Domain::rectangle(1.0, 1.0, n, n); }

GridField bump(const Domain& d) {
  const bool plane = d.dim() == 2;
  return sample(d, [plane](double x, double y) {
    return 3.0 * std::sin(M_PI * x) * (plane ? std::sin(M_PI * y) : 1.0);
  });
}

void BM_Laplacian1D(benchmark::State& state) {
  const Domain d = Domain::interval(1.0, static_cast<int>(state.range(0)));
  const GridField u = bump(d);
  for (auto _ : state) benchmark::DoNotOptimize(laplacian_apply(u));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.size()));
}
BENCHMARK(BM_Laplacian1D)->Arg(127)->Arg(1023)->Arg(16383);

void BM_Laplacian2D(benchmark::State& state) {
  const Domain d = square(static_cast<int>(state.range(0)));
  const GridField u = bump(d);
  for (auto _ : state) benchmark::DoNotOptimize(laplacian_apply(u));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.size()));
}
BENCHMARK(BM_Laplacian2D)->Arg(31)->Arg(127);

void BM_ShiftedSolve2D(benchmark::State& state) {
  const Domain d = square(static_cast<int>(state.range(0)));
  const ShiftedStiffnessSolver solver(d, 2.001, 0.1005);
  const GridField rhs = bump(d);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(rhs));
}
BENCHMARK(BM_ShiftedSolve2D)->Arg(31)->Arg(63);

void BM_Step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Domain d = state.range(1) == 1 ? Domain::interval(1.0, n) : square(n);
  ModelParams params;
  params.omega = 0.1;
  StepConfig cfg;
  Stepper stepper(d, params, cfg);
  SimState s(0.0, 0.1 * bump(d), GridField(d));
  for (auto _ : state) stepper.advance(s);
}
BENCHMARK(BM_Step)->Args({127, 1})->Args({1023, 1})->Args({31, 2})->Args({63, 2});

void BM_CStar(benchmark::State& state) {
  const Domain d = Domain::interval(1.0, static_cast<int>(state.range(0)));
  MinimizeOpts opts;
  opts.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(compute_c_star(d, 4.0, opts).c_star);
}
BENCHMARK(BM_CStar)->Arg(127)->Arg(255)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
