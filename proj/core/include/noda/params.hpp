#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "noda/random.hpp"
#include "noda/tensor.hpp"

namespace noda {

/// Spectrum slots of the retained centered mode block |m| <= kmax-1 per axis,
/// in a fixed grid-independent order (m ascending; 2-D row-major over (mx, my)).
/// Weight tensors are indexed by position in this list, so the same weights
/// apply at any resolution with n >= 2*kmax.
std::vector<int> centered_mode_indices(int kmax, int nx, int ny);
int centered_mode_count(int kmax, int spatial_rank);

/// Complex spectral weights R, stored as independent real and imaginary parts
/// so every optimizer state stays real.
struct SpectralConvParams {
  Tensor r_re;  // (M, width, width)
  Tensor r_im;
  int kmax = 0;
};

struct FnoBlockParams {
  Tensor w;  // (width x width) pointwise linear map, no bias
  SpectralConvParams conv;
};

struct PredictorParams {
  Tensor p_w, p_b;  // lifting: (width x in_channels), (width)
  std::array<FnoBlockParams, 4> blocks;
  Tensor q_w, q_b;  // projection: (1 x width), (1)
  int width = 64;
  int kmax = 20;
  int spatial_rank = 1;
  bool coord_channels = true;

  int in_channels() const { return 1 + (coord_channels ? spatial_rank : 0); }
};

/// Two affine layers with a relu between: d -> hidden -> p.
struct MeasurementNetParams {
  Tensor l1_w, l1_b;  // (hidden x d), (hidden)
  Tensor l2_w, l2_b;  // (p x hidden), (p)
  int d = 0, hidden = 256, p = 0;
};

struct GainParams {
  Tensor w_z, w_y;  // (d x p) each
  Tensor b;         // (d)
  bool cstar_learnable = false;
  Tensor cstar;  // (d x p), present only when learnable; otherwise the known
                 // operator's transpose is applied directly
  int d = 0, p = 0;
};

/// Everything learnable: prediction pathway plus E and the gain.
struct NodaParams {
  PredictorParams predictor;
  MeasurementNetParams enet;
  GainParams gain;
};

PredictorParams init_predictor(int width, int kmax, int spatial_rank, bool coord_channels,
                               Rng& rng);
MeasurementNetParams init_measurement_net(int d, int hidden, int p, Rng& rng);
GainParams init_gain(int d, int p, bool cstar_learnable, Rng& rng);
NodaParams init_noda(int width, int kmax, int spatial_rank, bool coord_channels, int d,
                     int e_hidden, int p, bool cstar_learnable, uint64_t seed);

/// Visits every learnable tensor in a fixed order shared by the optimizer,
/// gradient extraction, and the model file.
void for_each_param(NodaParams& p,
                    const std::function<void(const std::string&, Tensor&)>& fn);
std::vector<Tensor*> param_list(NodaParams& p);

}  // namespace noda
