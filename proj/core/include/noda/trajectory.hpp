#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "noda/errors.hpp"

namespace noda {

enum class Equation : uint8_t { KS = 1, KdV = 2, NS = 3 };

const char* equation_name(Equation eq);
Equation equation_from_name(const std::string& name);

/// A discretized PDE solution: recorded frames at t = 0, h, 2h, ...
struct Trajectory {
  Equation equation = Equation::KS;
  int nx = 0;
  int ny = 1;  // 1 for 1-D equations
  double h = 0.0;
  double length_x = 0.0;
  double length_y = 0.0;  // meaningful only when ny > 1
  uint64_t seed = 0;
  int n_frames = 0;
  std::vector<double> frames;  // n_frames x (nx*ny), row-major

  int frame_size() const { return nx * ny; }
  int spatial_rank() const { return ny > 1 ? 2 : 1; }
  double t_f() const { return h * (n_frames - 1); }

  std::span<const double> frame(int k) const {
    if (k < 0 || k >= n_frames)
      throw std::out_of_range("Trajectory::frame: index " + std::to_string(k) + " of " +
                              std::to_string(n_frames));
    return {frames.data() + static_cast<size_t>(k) * frame_size(),
            static_cast<size_t>(frame_size())};
  }
  std::span<double> frame(int k) {
    if (k < 0 || k >= n_frames)
      throw std::out_of_range("Trajectory::frame: index " + std::to_string(k) + " of " +
                              std::to_string(n_frames));
    return {frames.data() + static_cast<size_t>(k) * frame_size(),
            static_cast<size_t>(frame_size())};
  }
};

}  // namespace noda
