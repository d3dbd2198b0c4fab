#pragma once

#include <span>
#include <vector>

#include "noda/fft.hpp"
#include "noda/grid.hpp"
#include "noda/trajectory.hpp"

namespace noda {

inline constexpr double kPi = 3.14159265358979323846;

struct KSConfig {
  Grid1D grid{512, 64.0 * kPi};
  double h = 0.25;      // recorded timestep, seconds
  int inner_steps = 4;  // solver substeps per recorded frame
};

struct KdVConfig {
  Grid1D grid{128, 128.0};
  double h = 0.5;
  int inner_steps = 8;
};

struct NSConfig {
  Grid2D grid{64, 64};
  double h = 1.0;
  double re = 40.0;
  int inner_steps = 16;
  double forcing_scale = 1.0;  // 0 disables the sin+cos forcing

  double nu() const { return 1.0 / re; }
};

/// Random initial conditions. PowerLaw draws per-mode Gaussians shaped by
/// amplitude*(|k|^2+tau^2)^(-decay/2); SineModes sums the first n_modes sine
/// and cosine modes with unit-variance Gaussian amplitudes, rescaled so
/// max|z0| = 2*amplitude.
struct GrfSpec {
  enum class Kind : uint8_t { PowerLaw, SineModes };
  Kind kind = Kind::PowerLaw;
  double decay = 2.5;
  double tau = 7.0;
  double amplitude = 1.0;
  int n_modes = 10;
  uint64_t seed = 0;
};

GrfSpec default_grf(Equation eq, uint64_t seed);

std::vector<double> sample_initial_condition(const GrfSpec& grf, const Grid1D& grid);
std::vector<double> sample_initial_condition(const GrfSpec& grf, const Grid2D& grid);

/// Kassam-Trefethen ETDRK4 with phi-coefficients from 32-point complex contour
/// averages. Handles the KS symbol k^2-k^4 and the KdV symbol i*k^3.
class Etdrk4Stepper {
 public:
  Etdrk4Stepper(Equation eq, const Grid1D& grid, double dt, bool linear_only = false);

  void step(std::vector<double>& z) const;
  double dt() const { return dt_; }

 private:
  std::vector<cplx> nonlinear(const std::vector<cplx>& v) const;

  Grid1D grid_;
  double dt_;
  bool linear_only_;
  std::vector<cplx> e_, e2_, q_, f1_, f2_, f3_;
  std::vector<cplx> g_;           // -0.5 i k, Nyquist zeroed
  std::vector<double> dealias_;   // 2/3-rule mask on products
};

/// Pseudo-spectral vorticity stepper: streamfunction velocity recovery,
/// dealiased advection treated explicitly, Crank-Nicolson diffusion.
class NsStepper {
 public:
  NsStepper(const NSConfig& config, double dt, bool linear_only = false);

  void step(std::vector<double>& vorticity) const;
  /// (u, v) recovered from the current vorticity via the streamfunction.
  std::pair<std::vector<double>, std::vector<double>> velocity(
      std::span<const double> vorticity) const;
  double dt() const { return dt_; }

 private:
  NSConfig config_;
  double dt_;
  bool linear_only_;
  std::vector<double> ksq_, inv_ksq_;
  std::vector<double> kx_d_, ky_d_;  // derivative symbols, Nyquist zeroed
  std::vector<double> dealias_;
  std::vector<cplx> forcing_hat_;
  std::vector<double> cn_num_, cn_den_;
};

/// One recorded-step ETDRK4 substep (convenience wrapper; rollouts reuse a
/// cached stepper).
std::vector<double> etdrk4_step(std::span<const double> state, const KSConfig& config);
std::vector<double> etdrk4_step(std::span<const double> state, const KdVConfig& config);
std::vector<double> ns_crank_nicolson_step(std::span<const double> vorticity,
                                           const NSConfig& config);

Trajectory rollout(const KSConfig& config, std::span<const double> z0, double t_f,
                   uint64_t seed = 0);
Trajectory rollout(const KdVConfig& config, std::span<const double> z0, double t_f,
                   uint64_t seed = 0);
Trajectory rollout(const NSConfig& config, std::span<const double> z0, double t_f,
                   uint64_t seed = 0);

/// Samples z0 from the equation's default GRF (seeded) and rolls it out.
Trajectory generate_trajectory(Equation eq, int resolution_x, int resolution_y, double h,
                               double t_f, double re, uint64_t seed);

}  // namespace noda
