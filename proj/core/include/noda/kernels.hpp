#pragma once

#include <complex>
#include <cstddef>

namespace noda::kern {

using cplx = std::complex<double>;

// Row-major matrix products. Accumulating variants add into C.
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n);
// c (k x n) += a^T (m x k)^T * b (m x n)
void matmul_at_b_acc(const double* a, const double* b, double* c, int m, int k, int n);
// c (m x k) += a (m x n) * b^T (k x n)^T
void matmul_a_bt_acc(const double* a, const double* b, double* c, int m, int k, int n);

void relu(const double* x, double* y, size_t n);
void relu_mask_acc(const double* x, const double* dy, double* dx, size_t n);
void tanh_eval(const double* x, double* y, size_t n);

// Per-channel unnormalized transforms of real/complex fields, spatial dims (nx, ny).
void fft_channels(const double* real_in, cplx* spec_out, int channels, int nx, int ny);
// real_out = Re(backward(spec)) / (nx*ny), per channel
void ifft_channels_real(const cplx* spec_in, double* real_out, int channels, int nx, int ny);

// Mode bookkeeping for the spectral convolution: gather/scatter between the
// full spectrum (channels x S) and the retained list (channels x M).
void gather_modes(const cplx* spec, int channels, int spatial, const int* idx, int m_count,
                  cplx* out);
void scatter_modes(const cplx* half, int channels, int m_count, const int* idx, int spatial,
                   cplx* spec_out);  // zero-fills spec_out first

// out[:, m] = R_m * v[:, m] with R_m = Rre[m] + i*Rim[m], each (w x w).
void mode_contract(const double* r_re, const double* r_im, const cplx* v, cplx* out, int w,
                   int m_count);

}  // namespace noda::kern
