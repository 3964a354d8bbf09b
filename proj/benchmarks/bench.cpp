#include <benchmark/benchmark.h>

#include <vector>

#include "cbi/cumulant.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/paths.hpp"
#include "cbi/rng.hpp"

using namespace cbi;
using measures::LevyMeasure;
using mech::BranchingMechanism;

static void BM_PhiloxUniform(benchmark::State& state) {
  auto s = rng::make_stream(1);
  double acc = 0.0;
  for (auto _ : state) {
    acc += rng::uniform01(s);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_PhiloxUniform);

static void BM_StableIncrement(benchmark::State& state) {
  auto s = rng::make_stream(2);
  double acc = 0.0;
  for (auto _ : state) {
    acc += rng::sample_stable_increment(s, 1.5, 1e-3);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_StableIncrement);

static void BM_PoissonLargeMean(benchmark::State& state) {
  auto s = rng::make_stream(3);
  std::int64_t acc = 0;
  for (auto _ : state) {
    acc += rng::sample_poisson(s, 800.0);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_PoissonLargeMean);

static void BM_StableMechanismValue(benchmark::State& state) {
  const auto phi = mech::stable_mechanism(1.0, 0.5, 0.0);
  double z = 0.5;
  double acc = 0.0;
  for (auto _ : state) {
    acc += phi.value(z);
    z = z < 50.0 ? z * 1.1 : 0.5;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_StableMechanismValue);

static void BM_CumulantSolveFeller(benchmark::State& state) {
  const BranchingMechanism phi(0.0, 1.0, LevyMeasure::null());
  for (auto _ : state) {
    benchmark::DoNotOptimize(cumulant::cumulant_at(phi, 1.0, 5.0, 1e-9));
  }
}
BENCHMARK(BM_CumulantSolveFeller);

static void BM_CumulantSolveStable(benchmark::State& state) {
  const auto phi = mech::stable_mechanism(1.0, 0.5, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cumulant::cumulant_at(phi, 1.0, 5.0, 1e-9));
  }
}
BENCHMARK(BM_CumulantSolveStable);

static void BM_FellerExactPath(benchmark::State& state) {
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(i * 0.01);
  auto s = rng::make_stream(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        paths::simulate_feller_exact(1.0, 0.0, 0.0, 1.0, grid, s));
  }
}
BENCHMARK(BM_FellerExactPath);

static void BM_EulerPathAtoms(benchmark::State& state) {
  const BranchingMechanism phi(0.0, 0.0, LevyMeasure::atoms({{1.0, 1.0}}));
  const auto psi = mech::ImmigrationMechanism::none();
  paths::EulerOptions opts;
  opts.dt = 1e-3;
  auto s = rng::make_stream(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(paths::simulate_cbi(
        phi, psi, paths::RateSpec::unit(), 1.0, 1.0, opts, s));
  }
}
BENCHMARK(BM_EulerPathAtoms);

BENCHMARK_MAIN();
