#include <benchmark/benchmark.h>

#include <vector>

#include "homlab/cell_solver.hpp"
#include "homlab/philox.hpp"
#include "homlab/rng_fields.hpp"

using namespace homlab;

static void BM_UniformStream(benchmark::State& state) {
  UniformStream rng(1234, 0);
  double acc = 0.0;
  for (auto _ : state) acc += rng.next();
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_UniformStream);

static void BM_Birkhoff(benchmark::State& state) {
  FieldSpec spec;
  spec.dim = 2;
  spec.isotropic = true;
  spec.diagonal = {DistributionSpec::uniform(1.0, 2.0)};
  const FieldSample f = sample_field(spec, 1234, 0);
  const std::vector<double> t{static_cast<double>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(birkhoff_average(f, Observable{}, Box::unit(2), t));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Birkhoff)->Arg(64)->Arg(256);

static void BM_SolveCell(benchmark::State& state) {
  FieldSpec spec;
  spec.dim = 2;
  spec.isotropic = true;
  spec.diagonal = {DistributionSpec::uniform(1.0, 2.0)};
  const IntegrandModel model(sample_field(spec, 1234, 0), 1, false);
  const auto n = static_cast<int>(state.range(0));
  const Grid g(std::vector<double>{0.0, 0.0}, n / 2.0, n, 1);
  const CellProblem p = assemble(model, g, Matrix(1, 2, std::vector<double>{1.0, 1.0}));
  for (auto _ : state) {
    const SolveReport r = solve_cell(p);
    state.counters["iterations"] = r.iterations;
  }
}
BENCHMARK(BM_SolveCell)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
