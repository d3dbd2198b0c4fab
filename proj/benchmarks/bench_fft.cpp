#include <benchmark/benchmark.h>

#include <numbers>

#include "noda/fft.hpp"
#include "noda/random.hpp"

using namespace noda;

static void ForwardInverse1D(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Grid1D g(n, 64.0 * std::numbers::pi);
  Rng rng(1);
  auto v = gaussian_vector(rng, n);
  for (auto _ : state) {
    auto spec = dft_forward(v, g);
    auto back = dft_inverse(spec);
    benchmark::DoNotOptimize(back.data());
  }
  state.SetComplexityN(n);
}

static void SpectralDerivative(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Grid1D g(n, 64.0 * std::numbers::pi);
  Rng rng(2);
  auto v = gaussian_vector(rng, n);
  for (auto _ : state) {
    auto d = spectral_derivative(v, g, 2);
    benchmark::DoNotOptimize(d.data());
  }
}

BENCHMARK(ForwardInverse1D)->RangeMultiplier(4)->Range(64, 1024)->Complexity();
BENCHMARK(SpectralDerivative)->Arg(128)->Arg(512);
