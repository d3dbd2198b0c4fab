#pragma once

#include <stdexcept>
#include <string>

namespace noda {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Uniform periodic 1-D grid on [0, length).
struct Grid1D {
  int n = 0;           // point count, power of two, >= 8
  double length = 0;   // domain length L

  Grid1D() = default;
  Grid1D(int n_, double length_) : n(n_), length(length_) {
    if (!is_power_of_two(n) || n < 8)
      throw std::invalid_argument("Grid1D: n must be a power of two >= 8, got " +
                                  std::to_string(n_));
    if (!(length > 0.0)) throw std::invalid_argument("Grid1D: length must be positive");
  }

  double dx() const { return length / n; }
};

/// Uniform periodic grid on the unit torus [0,1)^2.
struct Grid2D {
  int nx = 0;
  int ny = 0;

  Grid2D() = default;
  Grid2D(int nx_, int ny_) : nx(nx_), ny(ny_) {
    if (!is_power_of_two(nx) || !is_power_of_two(ny) || nx < 8 || ny < 8)
      throw std::invalid_argument("Grid2D: dimensions must be powers of two >= 8");
  }

  int size() const { return nx * ny; }
  double length_x() const { return 1.0; }
  double length_y() const { return 1.0; }
};

}  // namespace noda
