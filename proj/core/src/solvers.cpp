#include "noda/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "noda/random.hpp"

namespace noda {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void check_state(std::span<const double> v, const char* where) {
  if (!all_finite(v)) throw NumericError(std::string(where) + ": non-finite state");
}

std::vector<double> dealias_mask_1d(int n) {
  // 2/3 rule: keep |m| <= n/3 in nonlinear products
  std::vector<double> mask(n, 0.0);
  const int cutoff = n / 3;
  for (int j = 0; j < n; ++j)
    if (std::abs(mode_index(j, n)) <= cutoff) mask[j] = 1.0;
  return mask;
}

// phi-function coefficients via contour averaging around each dt*L value;
// 32 points on the unit circle, closed under conjugation so hermitian
// symmetry of the symbols survives in the coefficients.
struct EtdCoeffs {
  std::vector<cplx> e, e2, q, f1, f2, f3;
};

EtdCoeffs etd_coefficients(const std::vector<cplx>& symbol, double dt) {
  const int n = static_cast<int>(symbol.size());
  constexpr int kContourPoints = 32;
  EtdCoeffs c;
  c.e.resize(n);
  c.e2.resize(n);
  c.q.assign(n, 0.0);
  c.f1.assign(n, 0.0);
  c.f2.assign(n, 0.0);
  c.f3.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const cplx ldt = symbol[j] * dt;
    c.e[j] = std::exp(ldt);
    c.e2[j] = std::exp(0.5 * ldt);
    cplx q(0.0), f1(0.0), f2(0.0), f3(0.0);
    for (int m = 0; m < kContourPoints; ++m) {
      const double theta = 2.0 * kPi * (m + 0.5) / kContourPoints;
      const cplx lr = ldt + std::polar(1.0, theta);
      const cplx elr = std::exp(lr);
      const cplx lr2 = lr * lr;
      const cplx lr3 = lr2 * lr;
      q += (std::exp(0.5 * lr) - 1.0) / lr;
      f1 += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr2)) / lr3;
      f2 += (2.0 + lr + elr * (-2.0 + lr)) / lr3;
      f3 += (-4.0 - 3.0 * lr - lr2 + elr * (4.0 - lr)) / lr3;
    }
    const double inv = dt / kContourPoints;
    c.q[j] = q * inv;
    c.f1[j] = f1 * inv;
    c.f2[j] = f2 * inv;
    c.f3[j] = f3 * inv;
  }
  return c;
}

}  // namespace

GrfSpec default_grf(Equation eq, uint64_t seed) {
  GrfSpec g;
  g.seed = seed;
  if (eq == Equation::NS) {
    g.kind = GrfSpec::Kind::PowerLaw;
    g.decay = 2.5;
    g.tau = 7.0;
    g.amplitude = std::pow(7.0, 1.5);
  } else {
    g.kind = GrfSpec::Kind::SineModes;
    g.n_modes = 10;
    g.amplitude = 1.0;  // rescaled to max|z0| = 2
  }
  return g;
}

std::vector<double> sample_initial_condition(const GrfSpec& grf, const Grid1D& grid) {
  Rng rng(grf.seed);
  if (grf.kind == GrfSpec::Kind::SineModes) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> z(grid.n, 0.0);
    for (int m = 1; m <= grf.n_modes; ++m) {
      const double a = dist(rng);
      const double b = dist(rng);
      for (int i = 0; i < grid.n; ++i) {
        const double phase = 2.0 * kPi * m * i / grid.n;
        z[i] += a * std::sin(phase) + b * std::cos(phase);
      }
    }
    double peak = 0.0;
    for (double v : z) peak = std::max(peak, std::abs(v));
    const double scale = peak > 0.0 ? 2.0 * grf.amplitude / peak : 0.0;
    for (double& v : z) v *= scale;
    return z;
  }

  // PowerLaw: shape the spectrum, hermitian-fill so the field is real.
  const int n = grid.n;
  std::normal_distribution<double> dist(0.0, 1.0);
  const auto k = wavenumbers(grid);
  std::vector<cplx> c(n, cplx(0.0));
  const double norm = std::sqrt(static_cast<double>(n));
  for (int j = 0; j <= n / 2; ++j) {
    const double xi1 = dist(rng);
    const double xi2 = dist(rng);
    if (j == 0) continue;  // zero mean
    const double den = std::pow(k[j] * k[j] + grf.tau * grf.tau, -grf.decay / 2.0);
    const double amp = grf.amplitude * norm * den;
    if (j == n / 2) {
      c[j] = amp * xi1;  // self-conjugate slot stays real
    } else {
      c[j] = amp * cplx(xi1, xi2);
      c[n - j] = std::conj(c[j]);
    }
  }
  SpectralField s;
  s.c = std::move(c);
  s.nx = n;
  s.ny = 1;
  return dft_inverse(s);
}

std::vector<double> sample_initial_condition(const GrfSpec& grf, const Grid2D& grid) {
  if (grf.kind == GrfSpec::Kind::SineModes)
    throw std::invalid_argument("sample_initial_condition: SineModes sampler is 1-D only");
  Rng rng(grf.seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const int nx = grid.nx, ny = grid.ny;
  const auto w = wavenumbers(grid);
  std::vector<cplx> c(static_cast<size_t>(nx) * ny, cplx(0.0));
  const double norm = std::sqrt(static_cast<double>(nx) * ny);
  auto conj_slot = [&](int jx, int jy) {
    return static_cast<size_t>((nx - jx) % nx) * ny + (ny - jy) % ny;
  };
  for (int jx = 0; jx < nx; ++jx) {
    for (int jy = 0; jy < ny; ++jy) {
      const size_t self = static_cast<size_t>(jx) * ny + jy;
      const size_t partner = conj_slot(jx, jy);
      if (partner < self) continue;  // filled by its conjugate
      const double xi1 = dist(rng);
      const double xi2 = dist(rng);
      if (jx == 0 && jy == 0) continue;
      const double k2 = w.kx[jx] * w.kx[jx] + w.ky[jy] * w.ky[jy];
      const double amp =
          grf.amplitude * norm * std::pow(k2 + grf.tau * grf.tau, -grf.decay / 2.0);
      if (partner == self) {
        c[self] = amp * xi1;
      } else {
        c[self] = amp * cplx(xi1, xi2);
        c[partner] = std::conj(c[self]);
      }
    }
  }
  SpectralField s;
  s.c = std::move(c);
  s.nx = nx;
  s.ny = ny;
  return dft_inverse(s);
}

Etdrk4Stepper::Etdrk4Stepper(Equation eq, const Grid1D& grid, double dt, bool linear_only)
    : grid_(grid), dt_(dt), linear_only_(linear_only) {
  if (!(dt > 0.0)) throw std::invalid_argument("Etdrk4Stepper: dt must be positive");
  const auto k = wavenumbers(grid);
  const int n = grid.n;
  std::vector<cplx> symbol(n);
  for (int j = 0; j < n; ++j) {
    const double kj = k[j];
    if (eq == Equation::KS) {
      symbol[j] = kj * kj - kj * kj * kj * kj;  // z_xx + z_xxxx terms
    } else if (eq == Equation::KdV) {
      symbol[j] = cplx(0.0, kj * kj * kj);  // -z_xxx
    } else {
      throw std::invalid_argument("Etdrk4Stepper: only KS and KdV symbols");
    }
  }
  EtdCoeffs c = etd_coefficients(symbol, dt);
  e_ = std::move(c.e);
  e2_ = std::move(c.e2);
  q_ = std::move(c.q);
  f1_ = std::move(c.f1);
  f2_ = std::move(c.f2);
  f3_ = std::move(c.f3);
  g_.resize(n);
  for (int j = 0; j < n; ++j) g_[j] = cplx(0.0, -0.5 * k[j]);
  g_[n / 2] = 0.0;  // odd derivative, Nyquist dropped
  dealias_ = dealias_mask_1d(n);
}

std::vector<cplx> Etdrk4Stepper::nonlinear(const std::vector<cplx>& v) const {
  const int n = grid_.n;
  std::vector<cplx> out(n, cplx(0.0));
  if (linear_only_) return out;
  // N(z) = -z z_x = -0.5 d(z^2)/dx, product dealiased by the 2/3 mask
  std::vector<cplx> buf(n);
  fftk::backward(v.data(), buf.data(), n, 1);
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const double zi = buf[i].real() * inv_n;
    buf[i] = zi * zi;
  }
  fftk::forward(buf.data(), out.data(), n, 1);
  for (int j = 0; j < n; ++j) out[j] *= g_[j] * dealias_[j];
  return out;
}

void Etdrk4Stepper::step(std::vector<double>& z) const {
  check_state(z, "etdrk4_step");
  const int n = grid_.n;
  std::vector<cplx> v(n);
  for (int i = 0; i < n; ++i) v[i] = z[i];
  std::vector<cplx> vhat(n);
  fftk::forward(v.data(), vhat.data(), n, 1);

  const auto nv = nonlinear(vhat);
  std::vector<cplx> a(n), b(n), c(n);
  for (int j = 0; j < n; ++j) a[j] = e2_[j] * vhat[j] + q_[j] * nv[j];
  const auto na = nonlinear(a);
  for (int j = 0; j < n; ++j) b[j] = e2_[j] * vhat[j] + q_[j] * na[j];
  const auto nb = nonlinear(b);
  for (int j = 0; j < n; ++j) c[j] = e2_[j] * a[j] + q_[j] * (2.0 * nb[j] - nv[j]);
  const auto nc = nonlinear(c);
  for (int j = 0; j < n; ++j)
    vhat[j] = e_[j] * vhat[j] + f1_[j] * nv[j] + 2.0 * f2_[j] * (na[j] + nb[j]) + f3_[j] * nc[j];

  fftk::backward(vhat.data(), v.data(), n, 1);
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) z[i] = v[i].real() * inv_n;
}

NsStepper::NsStepper(const NSConfig& config, double dt, bool linear_only)
    : config_(config), dt_(dt), linear_only_(linear_only) {
  if (!(dt > 0.0)) throw std::invalid_argument("NsStepper: dt must be positive");
  const int nx = config.grid.nx, ny = config.grid.ny;
  const auto w = wavenumbers(config.grid);
  const size_t total = static_cast<size_t>(nx) * ny;
  ksq_.resize(total);
  inv_ksq_.resize(total);
  kx_d_.resize(total);
  ky_d_.resize(total);
  dealias_.resize(total);
  cn_num_.resize(total);
  cn_den_.resize(total);
  const int cx = nx / 3, cy = ny / 3;
  const double nu = config.nu();
  for (int jx = 0; jx < nx; ++jx) {
    for (int jy = 0; jy < ny; ++jy) {
      const size_t s = static_cast<size_t>(jx) * ny + jy;
      const double kx = w.kx[jx];
      const double ky = w.ky[jy];
      ksq_[s] = kx * kx + ky * ky;
      inv_ksq_[s] = s == 0 ? 0.0 : 1.0 / ksq_[s];
      kx_d_[s] = jx == nx / 2 ? 0.0 : kx;
      ky_d_[s] = jy == ny / 2 ? 0.0 : ky;
      dealias_[s] = (std::abs(mode_index(jx, nx)) <= cx && std::abs(mode_index(jy, ny)) <= cy)
                        ? 1.0
                        : 0.0;
      cn_num_[s] = 1.0 - 0.5 * dt * nu * ksq_[s];
      cn_den_[s] = 1.0 + 0.5 * dt * nu * ksq_[s];
    }
  }
  // forcing f(x,y) = scale * (sin(2 pi (x+y)) + cos(2 pi (x+y)))
  std::vector<cplx> f(total);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy) {
      const double arg = 2.0 * kPi * (static_cast<double>(ix) / nx + static_cast<double>(iy) / ny);
      f[static_cast<size_t>(ix) * ny + iy] =
          config.forcing_scale * (std::sin(arg) + std::cos(arg));
    }
  forcing_hat_.resize(total);
  fftk::forward(f.data(), forcing_hat_.data(), nx, ny);
}

std::pair<std::vector<double>, std::vector<double>> NsStepper::velocity(
    std::span<const double> vorticity) const {
  const int nx = config_.grid.nx, ny = config_.grid.ny;
  const size_t total = static_cast<size_t>(nx) * ny;
  std::vector<cplx> what(total), psi(total), tmp(total), buf(total);
  for (size_t i = 0; i < total; ++i) buf[i] = vorticity[i];
  fftk::forward(buf.data(), what.data(), nx, ny);
  for (size_t s = 0; s < total; ++s) psi[s] = what[s] * inv_ksq_[s];
  std::vector<double> u(total), v(total);
  const double inv = 1.0 / total;
  for (size_t s = 0; s < total; ++s) tmp[s] = cplx(0.0, ky_d_[s]) * psi[s];  // u = psi_y
  fftk::backward(tmp.data(), buf.data(), nx, ny);
  for (size_t i = 0; i < total; ++i) u[i] = buf[i].real() * inv;
  for (size_t s = 0; s < total; ++s) tmp[s] = cplx(0.0, -kx_d_[s]) * psi[s];  // v = -psi_x
  fftk::backward(tmp.data(), buf.data(), nx, ny);
  for (size_t i = 0; i < total; ++i) v[i] = buf[i].real() * inv;
  return {std::move(u), std::move(v)};
}

void NsStepper::step(std::vector<double>& vorticity) const {
  check_state(vorticity, "ns_crank_nicolson_step");
  const int nx = config_.grid.nx, ny = config_.grid.ny;
  const size_t total = static_cast<size_t>(nx) * ny;
  std::vector<cplx> what(total), buf(total);
  for (size_t i = 0; i < total; ++i) buf[i] = vorticity[i];
  fftk::forward(buf.data(), what.data(), nx, ny);

  std::vector<cplx> nhat(total, cplx(0.0));
  if (!linear_only_) {
    std::vector<cplx> psi(total), tmp(total);
    for (size_t s = 0; s < total; ++s) psi[s] = what[s] * inv_ksq_[s];
    const double inv = 1.0 / total;
    std::vector<double> u(total), v(total), wx(total), wy(total);
    for (size_t s = 0; s < total; ++s) tmp[s] = cplx(0.0, ky_d_[s]) * psi[s];
    fftk::backward(tmp.data(), buf.data(), nx, ny);
    for (size_t i = 0; i < total; ++i) u[i] = buf[i].real() * inv;
    for (size_t s = 0; s < total; ++s) tmp[s] = cplx(0.0, -kx_d_[s]) * psi[s];
    fftk::backward(tmp.data(), buf.data(), nx, ny);
    for (size_t i = 0; i < total; ++i) v[i] = buf[i].real() * inv;
    for (size_t s = 0; s < total; ++s) tmp[s] = cplx(0.0, kx_d_[s]) * what[s];
    fftk::backward(tmp.data(), buf.data(), nx, ny);
    for (size_t i = 0; i < total; ++i) wx[i] = buf[i].real() * inv;
    for (size_t s = 0; s < total; ++s) tmp[s] = cplx(0.0, ky_d_[s]) * what[s];
    fftk::backward(tmp.data(), buf.data(), nx, ny);
    for (size_t i = 0; i < total; ++i) wy[i] = buf[i].real() * inv;
    for (size_t i = 0; i < total; ++i) buf[i] = u[i] * wx[i] + v[i] * wy[i];
    fftk::forward(buf.data(), nhat.data(), nx, ny);
    for (size_t s = 0; s < total; ++s) nhat[s] *= dealias_[s];
  }

  for (size_t s = 0; s < total; ++s)
    what[s] = (cn_num_[s] * what[s] + dt_ * (-nhat[s] + forcing_hat_[s])) / cn_den_[s];
  what[0] = 0.0;  // mean vorticity pinned at zero

  fftk::backward(what.data(), buf.data(), nx, ny);
  const double inv = 1.0 / total;
  for (size_t i = 0; i < total; ++i) vorticity[i] = buf[i].real() * inv;
}

std::vector<double> etdrk4_step(std::span<const double> state, const KSConfig& config) {
  Etdrk4Stepper stepper(Equation::KS, config.grid, config.h / config.inner_steps);
  std::vector<double> z(state.begin(), state.end());
  stepper.step(z);
  return z;
}

std::vector<double> etdrk4_step(std::span<const double> state, const KdVConfig& config) {
  Etdrk4Stepper stepper(Equation::KdV, config.grid, config.h / config.inner_steps);
  std::vector<double> z(state.begin(), state.end());
  stepper.step(z);
  return z;
}

std::vector<double> ns_crank_nicolson_step(std::span<const double> vorticity,
                                           const NSConfig& config) {
  NsStepper stepper(config, config.h / config.inner_steps);
  std::vector<double> z(vorticity.begin(), vorticity.end());
  stepper.step(z);
  return z;
}

namespace {

int frame_count(double t_f, double h) {
  if (t_f < 0.0) throw std::invalid_argument("rollout: t_f must be non-negative");
  const double ratio = t_f / h;
  const long long frames = std::llround(ratio);
  if (std::abs(ratio - frames) > 1e-9)
    throw std::invalid_argument("rollout: t_f must be a multiple of h");
  return static_cast<int>(frames) + 1;
}

template <typename StepFn>
Trajectory run_rollout(Equation eq, int nx, int ny, double lx, double ly, double h,
                       std::span<const double> z0, double t_f, uint64_t seed, int inner_steps,
                       StepFn&& substep) {
  const int frames = frame_count(t_f, h);
  Trajectory traj;
  traj.equation = eq;
  traj.nx = nx;
  traj.ny = ny;
  traj.h = h;
  traj.length_x = lx;
  traj.length_y = ly;
  traj.seed = seed;
  traj.n_frames = frames;
  traj.frames.reserve(static_cast<size_t>(frames) * nx * ny);
  std::vector<double> z(z0.begin(), z0.end());
  traj.frames.insert(traj.frames.end(), z.begin(), z.end());
  for (int k = 1; k < frames; ++k) {
    try {
      for (int s = 0; s < inner_steps; ++s) substep(z);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at frame " + std::to_string(k));
    }
    if (!all_finite(z))
      throw NumericError("rollout: solution blew up at frame " + std::to_string(k));
    traj.frames.insert(traj.frames.end(), z.begin(), z.end());
  }
  return traj;
}

}  // namespace

Trajectory rollout(const KSConfig& config, std::span<const double> z0, double t_f,
                   uint64_t seed) {
  Etdrk4Stepper stepper(Equation::KS, config.grid, config.h / config.inner_steps);
  return run_rollout(Equation::KS, config.grid.n, 1, config.grid.length, 0.0, config.h, z0, t_f,
                     seed, config.inner_steps, [&](std::vector<double>& z) { stepper.step(z); });
}

Trajectory rollout(const KdVConfig& config, std::span<const double> z0, double t_f,
                   uint64_t seed) {
  Etdrk4Stepper stepper(Equation::KdV, config.grid, config.h / config.inner_steps);
  return run_rollout(Equation::KdV, config.grid.n, 1, config.grid.length, 0.0, config.h, z0, t_f,
                     seed, config.inner_steps, [&](std::vector<double>& z) { stepper.step(z); });
}

Trajectory rollout(const NSConfig& config, std::span<const double> z0, double t_f,
                   uint64_t seed) {
  NsStepper stepper(config, config.h / config.inner_steps);
  return run_rollout(Equation::NS, config.grid.nx, config.grid.ny, 1.0, 1.0, config.h, z0, t_f,
                     seed, config.inner_steps, [&](std::vector<double>& z) { stepper.step(z); });
}

Trajectory generate_trajectory(Equation eq, int resolution_x, int resolution_y, double h,
                               double t_f, double re, uint64_t seed) {
  const GrfSpec grf = default_grf(eq, seed);
  switch (eq) {
    case Equation::KS: {
      KSConfig cfg;
      cfg.grid = Grid1D(resolution_x, 64.0 * kPi);
      cfg.h = h;
      return rollout(cfg, sample_initial_condition(grf, cfg.grid), t_f, seed);
    }
    case Equation::KdV: {
      KdVConfig cfg;
      cfg.grid = Grid1D(resolution_x, 128.0);
      cfg.h = h;
      return rollout(cfg, sample_initial_condition(grf, cfg.grid), t_f, seed);
    }
    case Equation::NS: {
      NSConfig cfg;
      cfg.grid = Grid2D(resolution_x, resolution_y);
      cfg.h = h;
      cfg.re = re;
      return rollout(cfg, sample_initial_condition(grf, cfg.grid), t_f, seed);
    }
  }
  throw std::invalid_argument("generate_trajectory: unknown equation");
}

}  // namespace noda
