#pragma once

#include <functional>
#include <span>
#include <vector>

#include "noda/tensor.hpp"

namespace noda::ad {

/// Handle to a tape node. Cheap to copy; only valid for the tape that made it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  MatMul,
  BiasRows,
  Relu,
  Tanh,
  Scale,
  Reshape,
  ConcatRows,
  Rfft,
  Irfft,
  ComplexMul,
  ModeSelect,
  ModeScatter,
  ModeMatmul,
  ReduceSum,
  L2Norm,
  DotRI,
};

struct Node {
  Op op = Op::Leaf;
  int a = -1, b = -1, c = -1;
  std::vector<int> shape;
  bool is_complex = false;
  bool needs_grad = false;
  std::vector<double> value;    // interleaved (re, im) when complex
  std::vector<double> adjoint;  // same layout, allocated lazily during backward
  // op-specific payload
  int nx = 0, ny = 1;         // spatial dims for Rfft/Irfft/ModeScatter
  double scalar = 0.0;        // Scale
  std::vector<int> modes;     // ModeSelect/ModeScatter: flat spectrum indices
};

/// Define-by-run record of primitive applications. Insertion order is the
/// topological order; backward() walks it once in reverse. One tape per
/// thread; a tape is rebuilt per training step.
class Tape {
 public:
  Var leaf(const Tensor& t);
  Var constant(std::span<const double> values, std::vector<int> shape, bool is_complex = false);
  Var scalar_constant(double v);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // Hadamard, real
  Var matmul(Var a, Var b);
  Var bias_rows(Var x, Var bias);  // out[i,j] = x[i,j] + bias[i]
  Var relu(Var x);
  Var tanh(Var x);
  Var scale(Var x, double s);
  Var reshape(Var x, std::vector<int> shape);
  Var concat_rows(Var a, Var b);

  Var rfft(Var x, int nx, int ny);    // real field(s) -> full complex spectrum
  Var irfft(Var spec, int nx, int ny);  // Re of normalized inverse
  Var complex_mul(Var a, Var b);
  Var mode_select(Var spec, const std::vector<int>& idx);
  Var mode_scatter(Var half, const std::vector<int>& idx, int nx, int ny);
  Var mode_matmul(Var r_re, Var r_im, Var v);

  Var reduce_sum(Var x);
  Var l2_norm(Var x);
  Var dot_ri(Var a, Var b);  // sum(a.re*b.re + a.im*b.im); plain dot for real

  /// Seeds the (scalar, real) root with 1.0 and accumulates adjoints into
  /// every node that requires gradients. A second call without rebuilding the
  /// tape is rejected.
  void backward(Var root);

  std::span<const double> value(Var v) const;
  std::span<const double> grad(Var v);
  const std::vector<int>& shape(Var v) const;
  bool is_complex(Var v) const;
  size_t node_count() const { return nodes_.size(); }
  void reset();

 private:
  Var push(Node n);
  Node& at(Var v);
  const Node& at(Var v) const;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

struct FdOptions {
  double eps = 1e-6;
  int max_coords = 200;      // >= this many coordinates sampled (all, if fewer exist)
  uint64_t seed = 7;
  // Optional kink screen: return true to exclude (param index, flat coordinate).
  std::function<bool(int, int64_t)> skip;
};

/// Central finite differences on a random coordinate subsample, compared
/// against backward(). Relative discrepancy uses a floor of 1e-3 times the
/// largest sampled gradient so roundoff noise on near-zero coordinates does
/// not mask real adjoint bugs on the rest.
double finite_difference_check(std::span<Tensor* const> params,
                               const std::function<Var(Tape&, std::span<const Var>)>& program,
                               const FdOptions& opt = {});

}  // namespace noda::ad
