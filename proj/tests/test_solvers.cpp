#include <doctest.h>

#include <cmath>
#include <thread>

#include "noda/solvers.hpp"

using namespace noda;

namespace {

double rel_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("initial conditions are deterministic and zero-mean") {
  Grid1D g(128, 64 * kPi);
  GrfSpec spec = default_grf(Equation::KS, 42);
  const auto a = sample_initial_condition(spec, g);
  const auto b = sample_initial_condition(spec, g);
  CHECK(a == b);  // bit-identical

  double mean = 0.0, peak = 0.0;
  for (double v : a) {
    mean += v;
    peak = std::max(peak, std::abs(v));
  }
  CHECK(std::abs(mean / g.n) < 1e-12);
  CHECK(peak == doctest::Approx(2.0).epsilon(1e-12));

  spec.amplitude = 0.0;
  for (double v : sample_initial_condition(spec, g)) CHECK(v == 0.0);

  GrfSpec ns = default_grf(Equation::NS, 7);
  Grid2D g2(64, 64);
  const auto f2 = sample_initial_condition(ns, g2);
  double mean2 = 0.0;
  for (double v : f2) mean2 += v;
  CHECK(std::abs(mean2 / g2.size()) < 1e-12);
  CHECK(sample_initial_condition(ns, g2) == f2);
}

TEST_CASE("steep power-law decay concentrates the spectrum below k=10") {
  Grid1D g(64, 2 * kPi);
  GrfSpec spec;
  spec.kind = GrfSpec::Kind::PowerLaw;
  spec.decay = 4.0;
  spec.tau = 1.0;
  double low = 0.0, high = 0.0;
  for (int s = 0; s < 100; ++s) {
    spec.seed = 100 + s;
    const auto z = sample_initial_condition(spec, g);
    const auto c = dft_forward(z, g);
    for (int j = 0; j < g.n; ++j) {
      const double e = std::norm(c.c[j]);
      if (std::abs(mode_index(j, g.n)) > 10)
        high += e;
      else
        low += e;
    }
  }
  CHECK(high / (high + low) < 0.01);
}

TEST_CASE("ETDRK4 with nonlinearity disabled matches the exact exponential") {
  for (Equation eq : {Equation::KS, Equation::KdV}) {
    Grid1D g = eq == Equation::KS ? Grid1D(128, 64 * kPi) : Grid1D(128, 128.0);
    const double dt = 0.05;
    Etdrk4Stepper stepper(eq, g, dt, /*linear_only=*/true);
    std::vector<double> z(g.n);
    for (int i = 0; i < g.n; ++i) z[i] = std::sin(2 * kPi * 3 * i / g.n) + 0.5 * std::cos(2 * kPi * 5 * i / g.n);
    auto expect_hat = dft_forward(z, g);
    const auto k = wavenumbers(g);
    for (int j = 0; j < g.n; ++j) {
      const cplx sym = eq == Equation::KS ? cplx(k[j] * k[j] - std::pow(k[j], 4), 0.0)
                                          : cplx(0.0, std::pow(k[j], 3));
      expect_hat.c[j] *= std::exp(sym * dt);
    }
    const auto expect = dft_inverse(expect_hat);
    stepper.step(z);
    double scale = 0.0;
    for (double v : expect) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < g.n; ++i) CHECK(std::abs(z[i] - expect[i]) <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("zero field is a fixed point") {
  KSConfig cfg;
  cfg.grid = Grid1D(64, 64 * kPi);
  std::vector<double> z(64, 0.0);
  const auto out = etdrk4_step(z, cfg);
  for (double v : out) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("KdV one-soliton propagates at 4*kappa^2") {
  KdVConfig cfg;  // n=128, L=128, h=0.5, 8 substeps
  // kappa chosen so the soliton's spectral tail sits inside the dealiased band
  const double kappa = 0.2, x0 = 64.0;
  auto soliton = [&](double x, double t) {
    const double c = 4.0 * kappa * kappa;
    double arg = std::fmod(x - c * t - x0, cfg.grid.length);
    if (arg > cfg.grid.length / 2) arg -= cfg.grid.length;
    if (arg < -cfg.grid.length / 2) arg += cfg.grid.length;
    const double s = 1.0 / std::cosh(kappa * arg);
    return 12.0 * kappa * kappa * s * s;
  };
  std::vector<double> z(cfg.grid.n);
  for (int i = 0; i < cfg.grid.n; ++i) z[i] = soliton(i * cfg.grid.dx(), 0.0);
  Etdrk4Stepper stepper(Equation::KdV, cfg.grid, cfg.h / cfg.inner_steps);
  for (int step = 0; step < 10 * cfg.inner_steps; ++step) stepper.step(z);
  std::vector<double> expect(cfg.grid.n);
  for (int i = 0; i < cfg.grid.n; ++i) expect[i] = soliton(i * cfg.grid.dx(), 10 * cfg.h);
  CHECK(rel_l2(z, expect) < 1e-4);
}

TEST_CASE("KdV mass stays conserved over 100 recorded frames") {
  KdVConfig cfg;
  GrfSpec grf = default_grf(Equation::KdV, 11);
  const auto z0 = sample_initial_condition(grf, cfg.grid);
  const auto traj = rollout(cfg, z0, 100 * cfg.h, 11);
  REQUIRE(traj.n_frames == 101);
  auto mass = [&](std::span<const double> f) {
    double s = 0.0;
    for (double v : f) s += v;
    return s * cfg.grid.dx();
  };
  const double m0 = mass(traj.frame(0));
  for (int k = 1; k <= 100; ++k) CHECK(std::abs(mass(traj.frame(k)) - m0) < 1e-8);
}

TEST_CASE("KS trajectories stay on the bounded attractor") {
  KSConfig cfg;  // shipped default: n=512, L=64*pi
  GrfSpec grf = default_grf(Equation::KS, 3);
  const auto traj = rollout(cfg, sample_initial_condition(grf, cfg.grid), 60.0, 3);
  double peak = 0.0;
  for (int k = traj.n_frames / 2; k < traj.n_frames; ++k)
    for (double v : traj.frame(k)) peak = std::max(peak, std::abs(v));
  CHECK(peak < 10.0);
  CHECK(peak > 0.1);  // not collapsed to zero either
}

TEST_CASE("NS enstrophy decreases without forcing") {
  NSConfig cfg;
  cfg.grid = Grid2D(32, 32);
  cfg.forcing_scale = 0.0;
  GrfSpec grf = default_grf(Equation::NS, 9);
  std::vector<double> z = sample_initial_condition(grf, cfg.grid);
  NsStepper stepper(cfg, cfg.h / cfg.inner_steps);
  auto enstrophy = [&](const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
  };
  double prev = enstrophy(z);
  for (int step = 0; step < 10; ++step) {
    stepper.step(z);
    const double cur = enstrophy(z);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("NS forcing response from rest matches the CN linear solve") {
  NSConfig cfg;
  cfg.grid = Grid2D(32, 32);
  std::vector<double> z(cfg.grid.size(), 0.0);
  const double dt = cfg.h / cfg.inner_steps;
  NsStepper stepper(cfg, dt);
  stepper.step(z);

  // oracle: z1_hat = dt*f_hat / (1 + dt/2 * nu * |k|^2), advection vanishes at z=0
  const auto w = wavenumbers(cfg.grid);
  std::vector<cplx> f(cfg.grid.size());
  for (int ix = 0; ix < cfg.grid.nx; ++ix)
    for (int iy = 0; iy < cfg.grid.ny; ++iy) {
      const double arg = 2 * kPi * (static_cast<double>(ix) / cfg.grid.nx +
                                    static_cast<double>(iy) / cfg.grid.ny);
      f[static_cast<size_t>(ix) * cfg.grid.ny + iy] = std::sin(arg) + std::cos(arg);
    }
  std::vector<cplx> fhat(cfg.grid.size());
  fftk::forward(f.data(), fhat.data(), cfg.grid.nx, cfg.grid.ny);
  std::vector<cplx> zin(cfg.grid.size()), zhat(cfg.grid.size());
  for (size_t i = 0; i < zin.size(); ++i) zin[i] = z[i];
  fftk::forward(zin.data(), zhat.data(), cfg.grid.nx, cfg.grid.ny);
  bool nonzero = false;
  for (int jx = 0; jx < cfg.grid.nx; ++jx)
    for (int jy = 0; jy < cfg.grid.ny; ++jy) {
      const size_t s = static_cast<size_t>(jx) * cfg.grid.ny + jy;
      const double ksq = w.kx[jx] * w.kx[jx] + w.ky[jy] * w.ky[jy];
      const cplx expect = s == 0 ? cplx(0.0) : dt * fhat[s] / (1.0 + 0.5 * dt * cfg.nu() * ksq);
      CHECK(std::abs(zhat[s] - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
      if (std::abs(expect) > 1e-9) nonzero = true;
    }
  CHECK(nonzero);
}

TEST_CASE("recovered velocity is divergence-free at every step") {
  NSConfig cfg;
  cfg.grid = Grid2D(32, 32);
  GrfSpec grf = default_grf(Equation::NS, 4);
  std::vector<double> z = sample_initial_condition(grf, cfg.grid);
  NsStepper stepper(cfg, cfg.h / cfg.inner_steps);
  const auto w = wavenumbers(cfg.grid);
  for (int step = 0; step < 5; ++step) {
    stepper.step(z);
    auto [u, v] = stepper.velocity(z);
    std::vector<cplx> ub(cfg.grid.size()), vb(cfg.grid.size()), uh(cfg.grid.size()),
        vh(cfg.grid.size());
    for (int i = 0; i < cfg.grid.size(); ++i) {
      ub[i] = u[i];
      vb[i] = v[i];
    }
    fftk::forward(ub.data(), uh.data(), cfg.grid.nx, cfg.grid.ny);
    fftk::forward(vb.data(), vh.data(), cfg.grid.nx, cfg.grid.ny);
    // first-derivative symbols follow the odd-order convention: Nyquist zeroed
    for (int jx = 0; jx < cfg.grid.nx; ++jx)
      for (int jy = 0; jy < cfg.grid.ny; ++jy) {
        const size_t s = static_cast<size_t>(jx) * cfg.grid.ny + jy;
        const double kx = jx == cfg.grid.nx / 2 ? 0.0 : w.kx[jx];
        const double ky = jy == cfg.grid.ny / 2 ? 0.0 : w.ky[jy];
        const cplx div = cplx(0.0, kx) * uh[s] + cplx(0.0, ky) * vh[s];
        CHECK(std::abs(div) / cfg.grid.size() < 1e-10);
      }
  }
}

TEST_CASE("Crank-Nicolson matches its rational symbol on the pure-diffusion problem") {
  NSConfig cfg;
  cfg.grid = Grid2D(32, 32);
  cfg.forcing_scale = 0.0;
  const double dt = cfg.h / cfg.inner_steps;
  NsStepper stepper(cfg, dt, /*linear_only=*/true);
  GrfSpec grf = default_grf(Equation::NS, 21);
  std::vector<double> z = sample_initial_condition(grf, cfg.grid);
  std::vector<cplx> zin(z.size()), before(z.size());
  for (size_t i = 0; i < z.size(); ++i) zin[i] = z[i];
  fftk::forward(zin.data(), before.data(), cfg.grid.nx, cfg.grid.ny);
  stepper.step(z);
  for (size_t i = 0; i < z.size(); ++i) zin[i] = z[i];
  std::vector<cplx> after(z.size());
  fftk::forward(zin.data(), after.data(), cfg.grid.nx, cfg.grid.ny);
  const auto w = wavenumbers(cfg.grid);
  for (int jx = 0; jx < cfg.grid.nx; ++jx)
    for (int jy = 0; jy < cfg.grid.ny; ++jy) {
      const size_t s = static_cast<size_t>(jx) * cfg.grid.ny + jy;
      const double ksq = w.kx[jx] * w.kx[jx] + w.ky[jy] * w.ky[jy];
      const cplx expect = s == 0 ? cplx(0.0)
                                 : before[s] * (1.0 - 0.5 * dt * cfg.nu() * ksq) /
                                       (1.0 + 0.5 * dt * cfg.nu() * ksq);
      CHECK(std::abs(after[s] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    }
}

TEST_CASE("rollout frame counts match the recording contract") {
  KSConfig ks;
  ks.grid = Grid1D(512, 64 * kPi);
  GrfSpec grf = default_grf(Equation::KS, 1);
  const auto traj = rollout(ks, sample_initial_condition(grf, ks.grid), 60.0, 1);
  CHECK(traj.n_frames == 241);
  CHECK(traj.frame_size() == 512);

  std::vector<double> z0(ks.grid.n, 0.5);
  const auto single = rollout(ks, z0, 0.0, 1);
  CHECK(single.n_frames == 1);
  for (int i = 0; i < 512; ++i) CHECK(single.frame(0)[i] == 0.5);

  CHECK_THROWS_AS(rollout(ks, z0, 0.3, 1), std::invalid_argument);
}

TEST_CASE("NS rollout records tf/h + 1 frames") {
  NSConfig cfg;
  cfg.grid = Grid2D(16, 16);
  cfg.inner_steps = 4;
  GrfSpec grf = default_grf(Equation::NS, 2);
  const auto traj = rollout(cfg, sample_initial_condition(grf, cfg.grid), 5.0, 2);
  CHECK(traj.n_frames == 6);
  CHECK(traj.frame_size() == 256);
}

TEST_CASE("generation is deterministic and thread-safe") {
  KSConfig cfg;
  cfg.grid = Grid1D(64, 64 * kPi);
  auto gen = [&](uint64_t seed) {
    GrfSpec grf = default_grf(Equation::KS, seed);
    return rollout(cfg, sample_initial_condition(grf, cfg.grid), 5.0, seed);
  };
  const auto ref0 = gen(100);
  const auto ref1 = gen(101);
  const auto ref2 = gen(102);
  const auto ref3 = gen(103);
  std::vector<Trajectory> out(4);
  std::vector<std::thread> pool;
  for (int i = 0; i < 4; ++i) pool.emplace_back([&, i] { out[i] = gen(100 + i); });
  for (auto& t : pool) t.join();
  CHECK(out[0].frames == ref0.frames);
  CHECK(out[1].frames == ref1.frames);
  CHECK(out[2].frames == ref2.frames);
  CHECK(out[3].frames == ref3.frames);
}

TEST_CASE("blow-up reports the frame index") {
  KSConfig cfg;
  cfg.grid = Grid1D(64, 64 * kPi);
  std::vector<double> z(64, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(etdrk4_step(z, cfg), NumericError);
  std::vector<double> huge(64);  // sawtooth large enough that z^2 overflows at once
  for (int i = 0; i < 64; ++i) huge[i] = (i % 2 ? 1.0 : -1.0) * 1e160;
  CHECK_THROWS_WITH_AS(rollout(cfg, huge, 1.0, 0), doctest::Contains("frame"), NumericError);
}

}  // TEST_SUITE
