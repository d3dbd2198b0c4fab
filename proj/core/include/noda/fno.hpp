#pragma once

#include <span>
#include <vector>

#include "noda/autodiff.hpp"
#include "noda/params.hpp"

namespace noda {

/// Mode-truncated spectral convolution of a width-channel field: transform
/// over the spatial axes only, contract the retained modes with R, zero-pad,
/// invert, keep the real part.
std::vector<double> spectral_conv(const SpectralConvParams& params,
                                  std::span<const double> field, int width, int nx, int ny);

/// relu(W v + spectral_conv(v)); pass apply_activation=false for the last block.
std::vector<double> fno_block(const FnoBlockParams& params, std::span<const double> field,
                              int width, int nx, int ny, bool apply_activation = true);

/// Residual prediction step: z + Q(blocks(P([z; coords]))).
std::vector<double> predict_step(const PredictorParams& params, std::span<const double> field,
                                 int nx, int ny);

/// Normalized coordinate channels (x/L, and y for 2-D), row-major (rank x nx*ny).
std::vector<double> coordinate_channels(int nx, int ny, int spatial_rank);

// Tape-side mirror of the prediction pathway; forward values are computed by
// the same kernels as the plain functions above.
struct PredictorVars {
  ad::Var p_w, p_b, q_w, q_b;
  struct BlockVars {
    ad::Var w, r_re, r_im;
  };
  std::array<BlockVars, 4> blocks;
  const PredictorParams* meta = nullptr;
};

PredictorVars bind_predictor(ad::Tape& tape, PredictorParams& params);
ad::Var predict_step_tape(ad::Tape& tape, const PredictorVars& vars, ad::Var field, int nx,
                          int ny);

}  // namespace noda
