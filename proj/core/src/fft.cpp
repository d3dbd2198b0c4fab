#include "noda/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "noda/errors.hpp"

namespace noda {

namespace {

// One cached plan per (nx, ny, sign). Plans are created with FFTW_UNALIGNED so
// they can execute on any caller buffer via the new-array interface, which is
// thread-safe; only planner access needs the lock.
struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;

  fftw_plan get(int nx, int ny, int sign) {
    std::scoped_lock lock(mu);
    auto key = std::make_tuple(nx, ny, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::vector<cplx> din(static_cast<size_t>(nx) * ny), dout(din.size());
    fftw_complex* di = reinterpret_cast<fftw_complex*>(din.data());
    fftw_complex* dy = reinterpret_cast<fftw_complex*>(dout.data());
    fftw_plan p = ny == 1
                      ? fftw_plan_dft_1d(nx, di, dy, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
                      : fftw_plan_dft_2d(nx, ny, di, dy, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void execute(const cplx* in, cplx* out, int nx, int ny, int sign) {
  fftw_plan p = cache().get(nx, ny, sign);
  // fftw_execute_dft does not modify the input for out-of-place c2c plans,
  // but the API takes non-const pointers.
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void check_pow2(size_t got, int expected, const char* what) {
  if (static_cast<int>(got) != expected)
    throw std::invalid_argument(std::string(what) + ": field length " + std::to_string(got) +
                                " does not match grid size " + std::to_string(expected));
}

}  // namespace

namespace fftk {

void forward(const cplx* in, cplx* out, int nx, int ny) { execute(in, out, nx, ny, FFTW_FORWARD); }
void backward(const cplx* in, cplx* out, int nx, int ny) { execute(in, out, nx, ny, FFTW_BACKWARD); }

}  // namespace fftk

std::vector<double> wavenumbers(const Grid1D& grid) {
  std::vector<double> k(grid.n);
  const double k0 = 2.0 * std::numbers::pi / grid.length;
  for (int j = 0; j < grid.n; ++j) k[j] = k0 * mode_index(j, grid.n);
  return k;
}

Wavenumbers2D wavenumbers(const Grid2D& grid) {
  Wavenumbers2D w;
  const double k0 = 2.0 * std::numbers::pi;  // unit torus
  w.kx.resize(grid.nx);
  w.ky.resize(grid.ny);
  for (int j = 0; j < grid.nx; ++j) w.kx[j] = k0 * mode_index(j, grid.nx);
  for (int j = 0; j < grid.ny; ++j) w.ky[j] = k0 * mode_index(j, grid.ny);
  return w;
}

SpectralField dft_forward(std::span<const double> field, const Grid1D& grid) {
  check_pow2(field.size(), grid.n, "dft_forward");
  SpectralField s;
  s.nx = grid.n;
  s.ny = 1;
  std::vector<cplx> in(field.begin(), field.end());
  s.c.resize(in.size());
  fftk::forward(in.data(), s.c.data(), grid.n, 1);
  return s;
}

SpectralField dft_forward(std::span<const double> field, const Grid2D& grid) {
  check_pow2(field.size(), grid.size(), "dft_forward");
  SpectralField s;
  s.nx = grid.nx;
  s.ny = grid.ny;
  std::vector<cplx> in(field.begin(), field.end());
  s.c.resize(in.size());
  fftk::forward(in.data(), s.c.data(), grid.nx, grid.ny);
  return s;
}

std::vector<double> dft_inverse(const SpectralField& spec) {
  std::vector<cplx> out(spec.c.size());
  fftk::backward(spec.c.data(), out.data(), spec.nx, spec.ny);
  const double scale = 1.0 / static_cast<double>(spec.c.size());
  std::vector<double> v(spec.c.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = out[i].real() * scale;
  return v;
}

std::vector<double> spectral_derivative(std::span<const double> field, const Grid1D& grid,
                                        int order) {
  if (order < 1) throw std::invalid_argument("spectral_derivative: order must be >= 1");
  SpectralField s = dft_forward(field, grid);
  const auto k = wavenumbers(grid);
  for (int j = 0; j < grid.n; ++j) {
    cplx ik(0.0, k[j]);
    s.c[j] *= std::pow(ik, order);
  }
  if (order % 2 == 1) s.c[grid.n / 2] = 0.0;  // Nyquist has no well-defined sign
  return dft_inverse(s);
}

}  // namespace noda
