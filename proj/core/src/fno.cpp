#include "noda/fno.hpp"

#include <cmath>

#include "noda/errors.hpp"
#include "noda/fft.hpp"
#include "noda/kernels.hpp"

namespace noda {

std::vector<int> centered_mode_indices(int kmax, int nx, int ny) {
  if (kmax < 1) throw std::invalid_argument("centered_mode_indices: kmax must be >= 1");
  if (2 * kmax > nx || (ny > 1 && 2 * kmax > ny))
    throw std::invalid_argument("centered_mode_indices: kmax " + std::to_string(kmax) +
                                " too large for grid " + std::to_string(nx) + "x" +
                                std::to_string(ny));
  auto slot = [](int m, int n) { return m >= 0 ? m : n + m; };
  std::vector<int> idx;
  if (ny == 1) {
    idx.reserve(2 * kmax - 1);
    for (int m = -(kmax - 1); m <= kmax - 1; ++m) idx.push_back(slot(m, nx));
  } else {
    idx.reserve(static_cast<size_t>(2 * kmax - 1) * (2 * kmax - 1));
    for (int mx = -(kmax - 1); mx <= kmax - 1; ++mx)
      for (int my = -(kmax - 1); my <= kmax - 1; ++my)
        idx.push_back(slot(mx, nx) * ny + slot(my, ny));
  }
  return idx;
}

int centered_mode_count(int kmax, int spatial_rank) {
  const int per_axis = 2 * kmax - 1;
  return spatial_rank == 1 ? per_axis : per_axis * per_axis;
}

std::vector<double> coordinate_channels(int nx, int ny, int spatial_rank) {
  const int spatial = nx * ny;
  std::vector<double> coords(static_cast<size_t>(spatial_rank) * spatial);
  if (spatial_rank == 1) {
    for (int i = 0; i < nx; ++i) coords[i] = static_cast<double>(i) / nx;
  } else {
    for (int ix = 0; ix < nx; ++ix)
      for (int iy = 0; iy < ny; ++iy) {
        coords[static_cast<size_t>(ix) * ny + iy] = static_cast<double>(ix) / nx;
        coords[spatial + static_cast<size_t>(ix) * ny + iy] = static_cast<double>(iy) / ny;
      }
  }
  return coords;
}

std::vector<double> spectral_conv(const SpectralConvParams& params,
                                  std::span<const double> field, int width, int nx, int ny) {
  const int spatial = nx * ny;
  if (static_cast<int>(field.size()) != width * spatial)
    throw ShapeError("spectral_conv: field size " + std::to_string(field.size()) +
                     " does not match " + std::to_string(width) + "x" + std::to_string(spatial));
  const auto idx = centered_mode_indices(params.kmax, nx, ny);
  const int m_count = static_cast<int>(idx.size());

  std::vector<kern::cplx> spec(static_cast<size_t>(width) * spatial);
  kern::fft_channels(field.data(), spec.data(), width, nx, ny);

  std::vector<kern::cplx> half(static_cast<size_t>(width) * m_count);
  kern::gather_modes(spec.data(), width, spatial, idx.data(), m_count, half.data());

  std::vector<kern::cplx> contracted(static_cast<size_t>(width) * m_count);
  kern::mode_contract(params.r_re.data.data(), params.r_im.data.data(), half.data(),
                      contracted.data(), width, m_count);

  std::vector<kern::cplx> full(static_cast<size_t>(width) * spatial);
  kern::scatter_modes(contracted.data(), width, m_count, idx.data(), spatial, full.data());

  std::vector<double> out(static_cast<size_t>(width) * spatial);
  kern::ifft_channels_real(full.data(), out.data(), width, nx, ny);
  return out;
}

std::vector<double> fno_block(const FnoBlockParams& params, std::span<const double> field,
                              int width, int nx, int ny, bool apply_activation) {
  const int spatial = nx * ny;
  std::vector<double> conv = spectral_conv(params.conv, field, width, nx, ny);
  std::vector<double> lin(static_cast<size_t>(width) * spatial);
  kern::matmul(params.w.data.data(), field.data(), lin.data(), width, width, spatial);
  for (size_t i = 0; i < lin.size(); ++i) lin[i] += conv[i];
  if (apply_activation) kern::relu(lin.data(), lin.data(), lin.size());
  return lin;
}

std::vector<double> predict_step(const PredictorParams& params, std::span<const double> field,
                                 int nx, int ny) {
  const int spatial = nx * ny;
  if (static_cast<int>(field.size()) != spatial)
    throw ShapeError("predict_step: field size " + std::to_string(field.size()) +
                     " does not match grid " + std::to_string(nx) + "x" + std::to_string(ny));
  const int cin = params.in_channels();
  std::vector<double> input;
  input.reserve(static_cast<size_t>(cin) * spatial);
  input.assign(field.begin(), field.end());
  if (params.coord_channels) {
    auto coords = coordinate_channels(nx, ny, params.spatial_rank);
    input.insert(input.end(), coords.begin(), coords.end());
  }

  const int w = params.width;
  std::vector<double> v(static_cast<size_t>(w) * spatial);
  kern::matmul(params.p_w.data.data(), input.data(), v.data(), w, cin, spatial);
  for (int i = 0; i < w; ++i) {
    const double bi = params.p_b.data[i];
    for (int j = 0; j < spatial; ++j) v[static_cast<size_t>(i) * spatial + j] += bi;
  }

  for (int l = 0; l < 4; ++l) v = fno_block(params.blocks[l], v, w, nx, ny, l < 3);

  std::vector<double> q(spatial);
  kern::matmul(params.q_w.data.data(), v.data(), q.data(), 1, w, spatial);
  std::vector<double> out(field.begin(), field.end());
  for (int j = 0; j < spatial; ++j) out[j] += q[j] + params.q_b.data[0];
  return out;
}

PredictorVars bind_predictor(ad::Tape& tape, PredictorParams& params) {
  PredictorVars v;
  v.meta = &params;
  v.p_w = tape.leaf(params.p_w);
  v.p_b = tape.leaf(params.p_b);
  for (int l = 0; l < 4; ++l) {
    v.blocks[l].w = tape.leaf(params.blocks[l].w);
    v.blocks[l].r_re = tape.leaf(params.blocks[l].conv.r_re);
    v.blocks[l].r_im = tape.leaf(params.blocks[l].conv.r_im);
  }
  v.q_w = tape.leaf(params.q_w);
  v.q_b = tape.leaf(params.q_b);
  return v;
}

ad::Var predict_step_tape(ad::Tape& tape, const PredictorVars& vars, ad::Var field, int nx,
                          int ny) {
  const PredictorParams& meta = *vars.meta;
  const int spatial = nx * ny;
  const int w = meta.width;
  const auto idx = centered_mode_indices(meta.kmax, nx, ny);

  ad::Var input = tape.reshape(field, {1, spatial});
  if (meta.coord_channels) {
    auto coords = coordinate_channels(nx, ny, meta.spatial_rank);
    ad::Var cc = tape.constant(coords, {meta.spatial_rank, spatial});
    input = tape.concat_rows(input, cc);
  }
  ad::Var v = tape.bias_rows(tape.matmul(vars.p_w, input), vars.p_b);

  for (int l = 0; l < 4; ++l) {
    ad::Var spec = tape.rfft(tape.reshape(v, ny > 1 ? std::vector<int>{w, nx, ny}
                                                    : std::vector<int>{w, nx}),
                             nx, ny);
    ad::Var half = tape.mode_select(spec, idx);
    ad::Var contracted = tape.mode_matmul(vars.blocks[l].r_re, vars.blocks[l].r_im, half);
    ad::Var full = tape.mode_scatter(contracted, idx, nx, ny);
    ad::Var conv = tape.reshape(tape.irfft(full, nx, ny), {w, spatial});
    ad::Var lin = tape.matmul(vars.blocks[l].w, tape.reshape(v, {w, spatial}));
    ad::Var s = tape.add(lin, conv);
    v = l < 3 ? tape.relu(s) : s;
  }

  ad::Var q = tape.bias_rows(tape.matmul(vars.q_w, v), vars.q_b);
  return tape.add(field, tape.reshape(q, {spatial}));
}

PredictorParams init_predictor(int width, int kmax, int spatial_rank, bool coord_channels,
                               Rng& rng) {
  PredictorParams p;
  p.width = width;
  p.kmax = kmax;
  p.spatial_rank = spatial_rank;
  p.coord_channels = coord_channels;
  const int cin = p.in_channels();
  const double lift_bound = 1.0 / std::sqrt(static_cast<double>(cin));
  p.p_w = Tensor::uniform({width, cin}, rng, -lift_bound, lift_bound);
  p.p_b = Tensor::zeros({width});
  const int m_count = centered_mode_count(kmax, spatial_rank);
  const double r_scale = 1.0 / (static_cast<double>(width) * width);
  const double w_bound = 1.0 / std::sqrt(static_cast<double>(width));
  for (auto& blk : p.blocks) {
    blk.w = Tensor::uniform({width, width}, rng, -w_bound, w_bound);
    blk.conv.kmax = kmax;
    blk.conv.r_re = Tensor::uniform({m_count, width, width}, rng, 0.0, r_scale);
    blk.conv.r_im = Tensor::uniform({m_count, width, width}, rng, 0.0, r_scale);
  }
  // zero projection: the residual step starts as the exact identity and the
  // increment is learned from there
  p.q_w = Tensor::zeros({1, width});
  p.q_b = Tensor::zeros({1});
  return p;
}

}  // namespace noda
