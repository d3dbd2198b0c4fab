#pragma once

#include <stdexcept>
#include <string>

namespace noda {

/// Malformed or truncated on-disk data (bad magic, version, sizes).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at runtime: solver blow-up, NaN loss, divergence.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible tensor/operator shapes; message names the offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace noda
