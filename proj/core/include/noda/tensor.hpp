#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "noda/errors.hpp"
#include "noda/random.hpp"

namespace noda {

/// Dense n-dimensional 64-bit array. Complex tensors store interleaved
/// (re, im) pairs, so data.size() == 2 * numel().
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool is_complex = false;
  bool requires_grad = false;

  Tensor() = default;

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(static_cast<size_t>(t.numel()), 0.0);
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<double> values) {
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::move(values);
    if (static_cast<int64_t>(t.data.size()) != t.numel())
      throw ShapeError("Tensor::from: " + std::to_string(t.data.size()) +
                       " values for shape of " + std::to_string(t.numel()));
    return t;
  }

  static Tensor randn(std::vector<int> shape, Rng& rng, double stddev) {
    Tensor t = zeros(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.data) v = dist(rng);
    return t;
  }

  static Tensor uniform(std::vector<int> shape, Rng& rng, double lo, double hi) {
    Tensor t = zeros(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t.data) v = dist(rng);
    return t;
  }
};

inline std::string shape_string(const std::vector<int>& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

}  // namespace noda
