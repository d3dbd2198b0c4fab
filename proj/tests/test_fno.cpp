#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "noda/fft.hpp"
#include "noda/fno.hpp"
#include "noda/model_io.hpp"
#include "noda/random.hpp"

using namespace noda;

namespace {

constexpr double pi = std::numbers::pi;

SpectralConvParams identity_weights(int kmax, int width, int spatial_rank) {
  SpectralConvParams p;
  p.kmax = kmax;
  const int m = centered_mode_count(kmax, spatial_rank);
  p.r_re = Tensor::zeros({m, width, width});
  p.r_im = Tensor::zeros({m, width, width});
  for (int mm = 0; mm < m; ++mm)
    for (int i = 0; i < width; ++i)
      p.r_re.data[(static_cast<size_t>(mm) * width + i) * width + i] = 1.0;
  return p;
}

PredictorParams zero_predictor(int width, int kmax, int rank, bool coords) {
  Rng rng(0);
  PredictorParams p = init_predictor(width, kmax, rank, coords, rng);
  p.p_w = Tensor::zeros(p.p_w.shape);
  p.p_b = Tensor::zeros(p.p_b.shape);
  for (auto& b : p.blocks) {
    b.w = Tensor::zeros(b.w.shape);
    b.conv.r_re = Tensor::zeros(b.conv.r_re.shape);
    b.conv.r_im = Tensor::zeros(b.conv.r_im.shape);
  }
  p.q_w = Tensor::zeros(p.q_w.shape);
  p.q_b = Tensor::zeros(p.q_b.shape);
  return p;
}

// O(n^2) reference evaluation of one 1-D block, independent of the FFT path.
std::vector<double> naive_fno_block(const FnoBlockParams& blk, const std::vector<double>& v,
                                    int w, int n, bool act) {
  const int kmax = blk.conv.kmax;
  std::vector<std::complex<double>> vhat(static_cast<size_t>(w) * n);
  for (int c = 0; c < w; ++c)
    for (int k = 0; k < n; ++k) {
      std::complex<double> s(0.0);
      for (int x = 0; x < n; ++x)
        s += v[static_cast<size_t>(c) * n + x] *
             std::polar(1.0, -2.0 * pi * k * x / n);
      vhat[static_cast<size_t>(c) * n + k] = s;
    }
  const auto idx = centered_mode_indices(kmax, n, 1);
  std::vector<double> out(static_cast<size_t>(w) * n, 0.0);
  for (int o = 0; o < w; ++o) {
    for (int x = 0; x < n; ++x) {
      std::complex<double> s(0.0);
      for (size_t m = 0; m < idx.size(); ++m) {
        std::complex<double> contracted(0.0);
        for (int i = 0; i < w; ++i) {
          const size_t r = (m * w + o) * w + i;
          contracted += std::complex<double>(blk.conv.r_re.data[r], blk.conv.r_im.data[r]) *
                        vhat[static_cast<size_t>(i) * n + idx[m]];
        }
        s += contracted * std::polar(1.0, 2.0 * pi * idx[m] * x / n);
      }
      double lin = 0.0;
      for (int i = 0; i < w; ++i)
        lin += blk.w.data[static_cast<size_t>(o) * w + i] * v[static_cast<size_t>(i) * n + x];
      double val = lin + s.real() / n;
      if (act) val = std::max(val, 0.0);
      out[static_cast<size_t>(o) * n + x] = val;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("fno") {

TEST_CASE("zero weights give a zero spectral convolution") {
  const int w = 3, n = 32;
  SpectralConvParams p;
  p.kmax = 5;
  const int m = centered_mode_count(5, 1);
  p.r_re = Tensor::zeros({m, w, w});
  p.r_im = Tensor::zeros({m, w, w});
  Rng rng(1);
  const auto v = gaussian_vector(rng, static_cast<size_t>(w) * n);
  for (double x : spectral_conv(p, v, w, n, 1)) CHECK(x == 0.0);
}

TEST_CASE("identity weights act as the band-limited projection") {
  const int w = 2, n = 64, kmax = 6;
  auto p = identity_weights(kmax, w, 1);
  Rng rng(2);
  const auto v = gaussian_vector(rng, static_cast<size_t>(w) * n);
  const auto out = spectral_conv(p, v, w, n, 1);

  // oracle: truncate the spectrum to |m| < kmax and invert, channel by channel
  Grid1D g(n, 2 * pi);
  for (int c = 0; c < w; ++c) {
    std::vector<double> chan(v.begin() + c * n, v.begin() + (c + 1) * n);
    auto spec = dft_forward(chan, g);
    for (int j = 0; j < n; ++j)
      if (std::abs(mode_index(j, n)) >= kmax) spec.c[j] = 0.0;
    const auto expect = dft_inverse(spec);
    for (int x = 0; x < n; ++x)
      CHECK(std::abs(out[static_cast<size_t>(c) * n + x] - expect[x]) < 1e-12);
  }
}

TEST_CASE("band-limited input passes through identity weights untouched") {
  const int w = 2, n = 64, kmax = 8;
  auto p = identity_weights(kmax, w, 1);
  std::vector<double> v(static_cast<size_t>(w) * n);
  for (int c = 0; c < w; ++c)
    for (int x = 0; x < n; ++x)
      v[static_cast<size_t>(c) * n + x] =
          std::sin(2 * pi * 3 * x / n + c) + 0.25 * std::cos(2 * pi * 7 * x / n);
  const auto out = spectral_conv(p, v, w, n, 1);
  for (size_t i = 0; i < v.size(); ++i) CHECK(out[i] == doctest::Approx(v[i]).epsilon(1e-12));
}

TEST_CASE("2-D identity weights project onto the centered block") {
  const int w = 1, n = 16, kmax = 3;
  auto p = identity_weights(kmax, w, 2);
  Rng rng(3);
  const auto v = gaussian_vector(rng, static_cast<size_t>(n) * n);
  const auto out = spectral_conv(p, v, w, n, n);
  Grid2D g(n, n);
  auto spec = dft_forward(v, g);
  for (int jx = 0; jx < n; ++jx)
    for (int jy = 0; jy < n; ++jy)
      if (std::abs(mode_index(jx, n)) >= kmax || std::abs(mode_index(jy, n)) >= kmax)
        spec.c[static_cast<size_t>(jx) * n + jy] = 0.0;
  const auto expect = dft_inverse(spec);
  for (size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - expect[i]) < 1e-12);
}

TEST_CASE("fno_block with zero parameters returns zeros") {
  const int w = 4, n = 32;
  Rng rng(4);
  FnoBlockParams blk;
  blk.w = Tensor::zeros({w, w});
  blk.conv.kmax = 4;
  const int m = centered_mode_count(4, 1);
  blk.conv.r_re = Tensor::zeros({m, w, w});
  blk.conv.r_im = Tensor::zeros({m, w, w});
  const auto v = gaussian_vector(rng, static_cast<size_t>(w) * n);
  for (double x : fno_block(blk, v, w, n, 1)) CHECK(x == 0.0);
}

TEST_CASE("fno_block preserves the grid size") {
  for (int n : {64, 128, 512}) {
    const int w = 2;
    Rng rng(5 + n);
    FnoBlockParams blk;
    blk.w = Tensor::randn({w, w}, rng, 0.3);
    blk.conv.kmax = 8;
    const int m = centered_mode_count(8, 1);
    blk.conv.r_re = Tensor::randn({m, w, w}, rng, 0.05);
    blk.conv.r_im = Tensor::randn({m, w, w}, rng, 0.05);
    const auto v = gaussian_vector(rng, static_cast<size_t>(w) * n);
    CHECK(fno_block(blk, v, w, n, 1).size() == v.size());
  }
}

TEST_CASE("fno_block matches a naive DFT re-evaluation") {
  const int w = 3, n = 32;
  Rng rng(6);
  FnoBlockParams blk;
  blk.w = Tensor::randn({w, w}, rng, 0.4);
  blk.conv.kmax = 4;
  const int m = centered_mode_count(4, 1);
  blk.conv.r_re = Tensor::randn({m, w, w}, rng, 0.2);
  blk.conv.r_im = Tensor::randn({m, w, w}, rng, 0.2);
  const auto v = gaussian_vector(rng, static_cast<size_t>(w) * n);
  const auto fast = fno_block(blk, v, w, n, 1);
  const auto slow = naive_fno_block(blk, v, w, n, true);
  for (size_t i = 0; i < fast.size(); ++i)
    CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-10));
}

TEST_CASE("predict_step at zero parameters is the exact identity") {
  const int n = 64;
  auto p = zero_predictor(8, 6, 1, true);
  Rng rng(7);
  const auto field = gaussian_vector(rng, n);
  const auto out = predict_step(p, field, n, 1);
  CHECK(out == field);  // bitwise
}

TEST_CASE("predict_step is deterministic") {
  const int n = 64;
  Rng rng(8);
  auto p = init_predictor(8, 6, 1, true, rng);
  const auto field = gaussian_vector(rng, n);
  CHECK(predict_step(p, field, n, 1) == predict_step(p, field, n, 1));
}

TEST_CASE("tape and plain forward paths agree bitwise") {
  const int n = 32;
  Rng rng(9);
  auto params = init_predictor(4, 4, 1, true, rng);
  const auto field = gaussian_vector(rng, n);
  const auto plain = predict_step(params, field, n, 1);

  ad::Tape tape;
  auto vars = bind_predictor(tape, params);
  ad::Var f = tape.constant(field, {n});
  ad::Var out = predict_step_tape(tape, vars, f, n, 1);
  const auto taped = tape.value(out);
  REQUIRE(taped.size() == plain.size());
  for (size_t i = 0; i < plain.size(); ++i) CHECK(taped[i] == plain[i]);
}

TEST_CASE("cyclic shifts commute with the predictor when coordinates are off") {
  const int n = 64, s = 5;
  Rng rng(10);
  auto p = init_predictor(6, 6, 1, /*coord_channels=*/false, rng);
  const auto field = gaussian_vector(rng, n);
  std::vector<double> shifted(n);
  for (int i = 0; i < n; ++i) shifted[i] = field[(i - s + n) % n];
  const auto out = predict_step(p, field, n, 1);
  const auto out_shifted = predict_step(p, shifted, n, 1);
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(out_shifted[i] - out[(i - s + n) % n]) < 1e-10);
}

TEST_CASE("evaluations transfer across discretization levels") {
  Rng rng(11);
  auto p = init_predictor(8, 8, 1, true, rng);
  auto band_limited = [&](int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / n;
      v[i] = std::sin(2 * pi * x) + 0.6 * std::cos(2 * pi * 3 * x) + 0.3 * std::sin(2 * pi * 5 * x);
    }
    return v;
  };
  const auto lo = predict_step(p, band_limited(128), 128, 1);
  const auto hi = predict_step(p, band_limited(256), 256, 1);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 128; ++i) {
    num += (lo[i] - hi[2 * i]) * (lo[i] - hi[2 * i]);
    den += lo[i] * lo[i];
  }
  CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("kmax beyond the grid is rejected") {
  CHECK_THROWS_AS(centered_mode_indices(20, 32, 1), std::invalid_argument);
  CHECK_NOTHROW(centered_mode_indices(16, 32, 1));
}

TEST_CASE("coordinate channels are normalized positions") {
  const auto c1 = coordinate_channels(8, 1, 1);
  CHECK(c1.size() == 8);
  CHECK(c1[0] == 0.0);
  CHECK(c1[4] == doctest::Approx(0.5));
  const auto c2 = coordinate_channels(4, 4, 2);
  CHECK(c2.size() == 32);
  CHECK(c2[1 * 4 + 2] == doctest::Approx(0.25));       // x channel
  CHECK(c2[16 + 1 * 4 + 2] == doctest::Approx(0.5));   // y channel
}

TEST_CASE("model files round-trip bit-exactly") {
  NodaParams params = init_noda(8, 5, 1, true, 32, 16, 32, false, 123);
  const auto path = std::filesystem::temp_directory_path() / "noda_test_model.nodm";
  save_model(path, params);
  NodaParams loaded = load_model(path);
  auto a = param_list(params);
  auto b = param_list(loaded);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->shape == b[i]->shape);
    CHECK(a[i]->data == b[i]->data);  // bit-identical
  }
  CHECK(loaded.predictor.kmax == 5);
  CHECK(loaded.enet.hidden == 16);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
