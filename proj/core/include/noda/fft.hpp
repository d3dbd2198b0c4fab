#pragma once

#include <complex>
#include <span>
#include <vector>

#include "noda/grid.hpp"

namespace noda {

using cplx = std::complex<double>;

/// Full complex spectrum of a (real or complex) field, in transform layout:
/// index j holds wavenumber k_j = 2*pi*m(j)/L with m(j) = j for j <= n/2 and
/// j - n otherwise. Convention used everywhere: forward is the unnormalized
/// sum, inverse divides by the point count.
struct SpectralField {
  std::vector<cplx> c;
  int nx = 0;
  int ny = 1;  // 1 for 1-D fields

  size_t size() const { return c.size(); }
};

/// k_j = 2*pi*j/L in transform order (0, 1, ..., n/2, -n/2+1, ..., -1).
std::vector<double> wavenumbers(const Grid1D& grid);

struct Wavenumbers2D {
  std::vector<double> kx;  // length nx
  std::vector<double> ky;  // length ny
};
Wavenumbers2D wavenumbers(const Grid2D& grid);

/// Signed integer mode index for transform slot j of an n-point axis.
inline int mode_index(int j, int n) { return j <= n / 2 ? j : j - n; }

SpectralField dft_forward(std::span<const double> field, const Grid1D& grid);
SpectralField dft_forward(std::span<const double> field, const Grid2D& grid);
std::vector<double> dft_inverse(const SpectralField& spec);

/// d^order/dx^order via ((ik)^order * c); Nyquist mode zeroed for odd orders.
std::vector<double> spectral_derivative(std::span<const double> field, const Grid1D& grid,
                                        int order);

// Raw transform kernels shared by solvers, the neural operator, and the tape.
// All operate on full complex spectra, length n (1-D) or nx*ny row-major (2-D).
namespace fftk {

/// out = sum_j in_j e^{-2 pi i jk/n}  (unnormalized forward)
void forward(const cplx* in, cplx* out, int nx, int ny);
/// out = sum_j in_j e^{+2 pi i jk/n}  (unnormalized backward; divide by nx*ny for inverse)
void backward(const cplx* in, cplx* out, int nx, int ny);

}  // namespace fftk

}  // namespace noda
