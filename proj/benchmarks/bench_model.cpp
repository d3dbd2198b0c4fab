#include <benchmark/benchmark.h>

#include "noda/assimilation.hpp"
#include "noda/solvers.hpp"
#include "noda/training.hpp"

using namespace noda;

namespace {

NodaParams toy_model(int width, int d) {
  return init_noda(width, 12, 1, true, d, 128, d, false, 3);
}

}  // namespace

static void PredictStep(benchmark::State& state) {
  const int d = 128;
  NodaParams params = toy_model(static_cast<int>(state.range(0)), d);
  Rng rng(4);
  auto z = gaussian_vector(rng, d);
  for (auto _ : state) {
    auto out = predict_step(params.predictor, z, d, 1);
    benchmark::DoNotOptimize(out.data());
  }
}

static void CorrectStep(benchmark::State& state) {
  const int d = 128;
  NodaParams params = toy_model(32, d);
  auto op = MeasurementOperator::identity(d);
  Rng rng(5);
  auto z = gaussian_vector(rng, d);
  auto y = op.apply(z);
  for (auto _ : state) {
    auto out = correct_step(params, op, z, y);
    benchmark::DoNotOptimize(out.data());
  }
}

static void TrainingStepThroughTape(benchmark::State& state) {
  KSConfig cfg;
  cfg.grid = Grid1D(128, 64.0 * kPi);
  GrfSpec grf = default_grf(Equation::KS, 6);
  Trajectory traj = rollout(cfg, sample_initial_condition(grf, cfg.grid), 10 * cfg.h, 6);
  NodaParams params = toy_model(32, 128);
  auto plist = param_list(params);
  for (Tensor* t : plist) t->requires_grad = true;
  auto op = MeasurementOperator::identity(128);
  std::vector<double> y_all;
  for (int k = 0; k < traj.n_frames; ++k) {
    auto row = op.apply(traj.frame(k));
    y_all.insert(y_all.end(), row.begin(), row.end());
  }
  std::vector<std::vector<double>> grads;
  for (Tensor* t : plist) grads.emplace_back(t->data.size(), 0.0);
  for (auto _ : state) {
    for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
    const double loss =
        segment_loss_grad(params, op, traj, y_all, 0, 10, 4, 0.5, 10, &grads);
    benchmark::DoNotOptimize(loss);
  }
}

BENCHMARK(PredictStep)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(CorrectStep);
BENCHMARK(TrainingStepThroughTape)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  ::benchmark::Initialize(&argc, argv);
  if (::benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  ::benchmark::RunSpecifiedBenchmarks();
  ::benchmark::Shutdown();
  return 0;
}
