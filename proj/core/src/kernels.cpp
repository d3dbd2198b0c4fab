#include "noda/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "noda/fft.hpp"

namespace noda::kern {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  std::fill(c, c + static_cast<size_t>(m) * n, 0.0);
  matmul_acc(a, b, c, m, k, n);
}

void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    const double* ai = a + static_cast<size_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double av = ai[l];
      if (av == 0.0) continue;
      const double* bl = b + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_at_b_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    const double* bi = b + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = ai[l];
      if (av == 0.0) continue;
      double* cl = c + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

void matmul_a_bt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * n;
    double* ci = c + static_cast<size_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double* bl = b + static_cast<size_t>(l) * n;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += ai[j] * bl[j];
      ci[l] += s;
    }
  }
}

void relu(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask_acc(const double* x, const double* dy, double* dx, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) dx[i] += dy[i];
}

void tanh_eval(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void fft_channels(const double* real_in, cplx* spec_out, int channels, int nx, int ny) {
  const size_t spatial = static_cast<size_t>(nx) * ny;
  std::vector<cplx> buf(spatial);
  for (int c = 0; c < channels; ++c) {
    const double* src = real_in + c * spatial;
    for (size_t i = 0; i < spatial; ++i) buf[i] = src[i];
    fftk::forward(buf.data(), spec_out + c * spatial, nx, ny);
  }
}

void ifft_channels_real(const cplx* spec_in, double* real_out, int channels, int nx, int ny) {
  const size_t spatial = static_cast<size_t>(nx) * ny;
  const double scale = 1.0 / static_cast<double>(spatial);
  std::vector<cplx> buf(spatial);
  for (int c = 0; c < channels; ++c) {
    fftk::backward(spec_in + c * spatial, buf.data(), nx, ny);
    double* dst = real_out + c * spatial;
    for (size_t i = 0; i < spatial; ++i) dst[i] = buf[i].real() * scale;
  }
}

void gather_modes(const cplx* spec, int channels, int spatial, const int* idx, int m_count,
                  cplx* out) {
  for (int c = 0; c < channels; ++c) {
    const cplx* src = spec + static_cast<size_t>(c) * spatial;
    cplx* dst = out + static_cast<size_t>(c) * m_count;
    for (int m = 0; m < m_count; ++m) dst[m] = src[idx[m]];
  }
}

void scatter_modes(const cplx* half, int channels, int m_count, const int* idx, int spatial,
                   cplx* spec_out) {
  std::fill(spec_out, spec_out + static_cast<size_t>(channels) * spatial, cplx(0.0, 0.0));
  for (int c = 0; c < channels; ++c) {
    const cplx* src = half + static_cast<size_t>(c) * m_count;
    cplx* dst = spec_out + static_cast<size_t>(c) * spatial;
    for (int m = 0; m < m_count; ++m) dst[idx[m]] = src[m];
  }
}

void mode_contract(const double* r_re, const double* r_im, const cplx* v, cplx* out, int w,
                   int m_count) {
  std::fill(out, out + static_cast<size_t>(w) * m_count, cplx(0.0, 0.0));
  for (int m = 0; m < m_count; ++m) {
    const double* rre = r_re + static_cast<size_t>(m) * w * w;
    const double* rim = r_im + static_cast<size_t>(m) * w * w;
    for (int o = 0; o < w; ++o) {
      cplx acc(0.0, 0.0);
      const double* rre_o = rre + static_cast<size_t>(o) * w;
      const double* rim_o = rim + static_cast<size_t>(o) * w;
      for (int i = 0; i < w; ++i) {
        acc += cplx(rre_o[i], rim_o[i]) * v[static_cast<size_t>(i) * m_count + m];
      }
      out[static_cast<size_t>(o) * m_count + m] = acc;
    }
  }
}

}  // namespace noda::kern
