#include <benchmark/benchmark.h>

#include "noda/solvers.hpp"

using namespace noda;

static void KsStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  KSConfig cfg;
  cfg.grid = Grid1D(n, 64.0 * kPi);
  GrfSpec grf = default_grf(Equation::KS, 1);
  auto z = sample_initial_condition(grf, cfg.grid);
  Etdrk4Stepper stepper(Equation::KS, cfg.grid, cfg.h / cfg.inner_steps);
  for (auto _ : state) {
    stepper.step(z);
    benchmark::DoNotOptimize(z.data());
  }
}

static void NsStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  NSConfig cfg;
  cfg.grid = Grid2D(n, n);
  GrfSpec grf = default_grf(Equation::NS, 2);
  auto z = sample_initial_condition(grf, cfg.grid);
  NsStepper stepper(cfg, cfg.h / cfg.inner_steps);
  for (auto _ : state) {
    stepper.step(z);
    benchmark::DoNotOptimize(z.data());
  }
}

BENCHMARK(KsStep)->Arg(128)->Arg(512);
BENCHMARK(NsStep)->Arg(32)->Arg(64);
