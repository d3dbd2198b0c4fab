#include "noda/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "noda/errors.hpp"
#include "noda/fft.hpp"
#include "noda/kernels.hpp"

namespace noda::ad {

namespace {

int64_t numel_of(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

cplx* as_cplx(std::vector<double>& v) { return reinterpret_cast<cplx*>(v.data()); }
const cplx* as_cplx(const std::vector<double>& v) {
  return reinterpret_cast<const cplx*>(v.data());
}

}  // namespace

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Node& Tape::at(Var v) {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Tape: invalid Var");
  return nodes_[v.id];
}
const Node& Tape::at(Var v) const { return const_cast<Tape*>(this)->at(v); }

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

Var Tape::leaf(const Tensor& t) {
  Node n;
  n.op = Op::Leaf;
  n.shape = t.shape;
  n.is_complex = t.is_complex;
  n.needs_grad = t.requires_grad;
  n.value = t.data;
  return push(std::move(n));
}

Var Tape::constant(std::span<const double> values, std::vector<int> shape, bool is_complex) {
  Node n;
  n.op = Op::Leaf;
  n.shape = std::move(shape);
  n.is_complex = is_complex;
  n.needs_grad = false;
  const size_t expect = static_cast<size_t>(numel_of(n.shape)) * (is_complex ? 2 : 1);
  require(values.size() == expect, "constant: value count does not match shape");
  n.value.assign(values.begin(), values.end());
  return push(std::move(n));
}

Var Tape::scalar_constant(double v) {
  double d = v;
  return constant(std::span<const double>(&d, 1), {1});
}

Var Tape::add(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require(na.shape == nb.shape && na.is_complex == nb.is_complex,
          "add: shape mismatch " + shape_string(na.shape) + " vs " + shape_string(nb.shape));
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.shape = na.shape;
  n.is_complex = na.is_complex;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.resize(na.value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = na.value[i] + nb.value[i];
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require(na.shape == nb.shape && na.is_complex == nb.is_complex,
          "sub: shape mismatch " + shape_string(na.shape) + " vs " + shape_string(nb.shape));
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.shape = na.shape;
  n.is_complex = na.is_complex;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.resize(na.value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = na.value[i] - nb.value[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require(!na.is_complex && !nb.is_complex, "mul: complex inputs require complex_mul");
  require(na.shape == nb.shape,
          "mul: shape mismatch " + shape_string(na.shape) + " vs " + shape_string(nb.shape));
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.shape = na.shape;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.resize(na.value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = na.value[i] * nb.value[i];
  return push(std::move(n));
}

Var Tape::complex_mul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require(na.is_complex && nb.is_complex && na.shape == nb.shape,
          "complex_mul: need matching complex shapes " + shape_string(na.shape) + " vs " +
              shape_string(nb.shape));
  Node n;
  n.op = Op::ComplexMul;
  n.a = a.id;
  n.b = b.id;
  n.shape = na.shape;
  n.is_complex = true;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.resize(na.value.size());
  const cplx* pa = as_cplx(na.value);
  const cplx* pb = as_cplx(nb.value);
  cplx* pc = as_cplx(n.value);
  const int64_t count = numel_of(n.shape);
  for (int64_t i = 0; i < count; ++i) pc[i] = pa[i] * pb[i];
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require(!na.is_complex && !nb.is_complex, "matmul: real tensors only");
  require(na.shape.size() == 2, "matmul: lhs must be rank 2, got " + shape_string(na.shape));
  require(nb.shape.size() == 1 || nb.shape.size() == 2,
          "matmul: rhs must be rank 1 or 2, got " + shape_string(nb.shape));
  const int m = na.shape[0];
  const int k = na.shape[1];
  const int kb = nb.shape[0];
  const int ncols = nb.shape.size() == 2 ? nb.shape[1] : 1;
  require(k == kb, "matmul: inner dimension mismatch " + shape_string(na.shape) + " vs " +
                       shape_string(nb.shape));
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.shape = nb.shape.size() == 2 ? std::vector<int>{m, ncols} : std::vector<int>{m};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.resize(static_cast<size_t>(m) * ncols);
  kern::matmul(na.value.data(), nb.value.data(), n.value.data(), m, k, ncols);
  return push(std::move(n));
}

Var Tape::bias_rows(Var x, Var bias) {
  const Node& nx_ = at(x);
  const Node& nb = at(bias);
  require(!nx_.is_complex && !nb.is_complex && nx_.shape.size() == 2 && nb.shape.size() == 1 &&
              nb.shape[0] == nx_.shape[0],
          "bias_rows: need (r x c) and (r), got " + shape_string(nx_.shape) + " and " +
              shape_string(nb.shape));
  Node n;
  n.op = Op::BiasRows;
  n.a = x.id;
  n.b = bias.id;
  n.shape = nx_.shape;
  n.needs_grad = nx_.needs_grad || nb.needs_grad;
  n.value.resize(nx_.value.size());
  const int rows = nx_.shape[0], cols = nx_.shape[1];
  for (int i = 0; i < rows; ++i) {
    const double bi = nb.value[i];
    for (int j = 0; j < cols; ++j)
      n.value[static_cast<size_t>(i) * cols + j] = nx_.value[static_cast<size_t>(i) * cols + j] + bi;
  }
  return push(std::move(n));
}

Var Tape::relu(Var x) {
  const Node& nx_ = at(x);
  require(!nx_.is_complex, "relu: real tensors only");
  Node n;
  n.op = Op::Relu;
  n.a = x.id;
  n.shape = nx_.shape;
  n.needs_grad = nx_.needs_grad;
  n.value.resize(nx_.value.size());
  kern::relu(nx_.value.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Var Tape::tanh(Var x) {
  const Node& nx_ = at(x);
  require(!nx_.is_complex, "tanh: real tensors only");
  Node n;
  n.op = Op::Tanh;
  n.a = x.id;
  n.shape = nx_.shape;
  n.needs_grad = nx_.needs_grad;
  n.value.resize(nx_.value.size());
  kern::tanh_eval(nx_.value.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Var Tape::scale(Var x, double s) {
  const Node& nx_ = at(x);
  Node n;
  n.op = Op::Scale;
  n.a = x.id;
  n.shape = nx_.shape;
  n.is_complex = nx_.is_complex;
  n.needs_grad = nx_.needs_grad;
  n.scalar = s;
  n.value.resize(nx_.value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = nx_.value[i] * s;
  return push(std::move(n));
}

Var Tape::reshape(Var x, std::vector<int> shape) {
  const Node& nx_ = at(x);
  require(numel_of(shape) == numel_of(nx_.shape),
          "reshape: element count mismatch " + shape_string(nx_.shape) + " -> " +
              shape_string(shape));
  Node n;
  n.op = Op::Reshape;
  n.a = x.id;
  n.shape = std::move(shape);
  n.is_complex = nx_.is_complex;
  n.needs_grad = nx_.needs_grad;
  n.value = nx_.value;
  return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require(!na.is_complex && !nb.is_complex && na.shape.size() == 2 && nb.shape.size() == 2 &&
              na.shape[1] == nb.shape[1],
          "concat_rows: need (r1 x c) and (r2 x c), got " + shape_string(na.shape) + " and " +
              shape_string(nb.shape));
  Node n;
  n.op = Op::ConcatRows;
  n.a = a.id;
  n.b = b.id;
  n.shape = {na.shape[0] + nb.shape[0], na.shape[1]};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.reserve(na.value.size() + nb.value.size());
  n.value = na.value;
  n.value.insert(n.value.end(), nb.value.begin(), nb.value.end());
  return push(std::move(n));
}

Var Tape::rfft(Var x, int nx, int ny) {
  const Node& nx_ = at(x);
  require(!nx_.is_complex, "rfft: real input expected");
  const int64_t spatial = static_cast<int64_t>(nx) * ny;
  require(numel_of(nx_.shape) % spatial == 0,
          "rfft: shape " + shape_string(nx_.shape) + " not divisible by spatial size");
  Node n;
  n.op = Op::Rfft;
  n.a = x.id;
  n.shape = nx_.shape;
  n.is_complex = true;
  n.needs_grad = nx_.needs_grad;
  n.nx = nx;
  n.ny = ny;
  const int channels = static_cast<int>(numel_of(nx_.shape) / spatial);
  n.value.resize(2 * static_cast<size_t>(numel_of(nx_.shape)));
  kern::fft_channels(nx_.value.data(), as_cplx(n.value), channels, nx, ny);
  return push(std::move(n));
}

Var Tape::irfft(Var spec, int nx, int ny) {
  const Node& ns = at(spec);
  require(ns.is_complex, "irfft: complex input expected");
  const int64_t spatial = static_cast<int64_t>(nx) * ny;
  require(numel_of(ns.shape) % spatial == 0,
          "irfft: shape " + shape_string(ns.shape) + " not divisible by spatial size");
  Node n;
  n.op = Op::Irfft;
  n.a = spec.id;
  n.shape = ns.shape;
  n.is_complex = false;
  n.needs_grad = ns.needs_grad;
  n.nx = nx;
  n.ny = ny;
  const int channels = static_cast<int>(numel_of(ns.shape) / spatial);
  n.value.resize(static_cast<size_t>(numel_of(ns.shape)));
  kern::ifft_channels_real(as_cplx(ns.value), n.value.data(), channels, nx, ny);
  return push(std::move(n));
}

Var Tape::mode_select(Var spec, const std::vector<int>& idx) {
  const Node& ns = at(spec);
  require(ns.is_complex, "mode_select: complex spectrum expected");
  const int channels = ns.shape.size() >= 2 ? ns.shape[0] : 1;
  const int spatial = static_cast<int>(numel_of(ns.shape)) / channels;
  for (int i : idx)
    require(i >= 0 && i < spatial, "mode_select: mode index out of range");
  Node n;
  n.op = Op::ModeSelect;
  n.a = spec.id;
  n.is_complex = true;
  n.needs_grad = ns.needs_grad;
  n.modes = idx;
  const int m_count = static_cast<int>(idx.size());
  n.shape = ns.shape.size() >= 2 ? std::vector<int>{channels, m_count} : std::vector<int>{m_count};
  n.value.resize(2 * static_cast<size_t>(channels) * m_count);
  kern::gather_modes(as_cplx(ns.value), channels, spatial, idx.data(), m_count, as_cplx(n.value));
  return push(std::move(n));
}

Var Tape::mode_scatter(Var half, const std::vector<int>& idx, int nx, int ny) {
  const Node& nh = at(half);
  require(nh.is_complex, "mode_scatter: complex input expected");
  const int channels = nh.shape.size() >= 2 ? nh.shape[0] : 1;
  const int m_count = static_cast<int>(numel_of(nh.shape)) / channels;
  require(m_count == static_cast<int>(idx.size()), "mode_scatter: index count mismatch");
  const int spatial = nx * ny;
  Node n;
  n.op = Op::ModeScatter;
  n.a = half.id;
  n.is_complex = true;
  n.needs_grad = nh.needs_grad;
  n.modes = idx;
  n.nx = nx;
  n.ny = ny;
  if (nh.shape.size() >= 2)
    n.shape = ny > 1 ? std::vector<int>{channels, nx, ny} : std::vector<int>{channels, nx};
  else
    n.shape = ny > 1 ? std::vector<int>{nx, ny} : std::vector<int>{nx};
  n.value.resize(2 * static_cast<size_t>(channels) * spatial);
  kern::scatter_modes(as_cplx(nh.value), channels, m_count, idx.data(), spatial,
                      as_cplx(n.value));
  return push(std::move(n));
}

Var Tape::mode_matmul(Var r_re, Var r_im, Var v) {
  const Node& nre = at(r_re);
  const Node& nim = at(r_im);
  const Node& nv = at(v);
  require(!nre.is_complex && !nim.is_complex && nv.is_complex,
          "mode_matmul: (real, real, complex) inputs expected");
  require(nre.shape == nim.shape && nre.shape.size() == 3 && nre.shape[1] == nre.shape[2],
          "mode_matmul: weights must both be (M x w x w), got " + shape_string(nre.shape) +
              " and " + shape_string(nim.shape));
  require(nv.shape.size() == 2 && nv.shape[0] == nre.shape[1] && nv.shape[1] == nre.shape[0],
          "mode_matmul: value must be (w x M) matching weights " + shape_string(nre.shape) +
              ", got " + shape_string(nv.shape));
  const int m_count = nre.shape[0];
  const int w = nre.shape[1];
  Node n;
  n.op = Op::ModeMatmul;
  n.a = r_re.id;
  n.b = r_im.id;
  n.c = v.id;
  n.is_complex = true;
  n.needs_grad = nre.needs_grad || nim.needs_grad || nv.needs_grad;
  n.shape = {w, m_count};
  n.value.resize(2 * static_cast<size_t>(w) * m_count);
  kern::mode_contract(nre.value.data(), nim.value.data(), as_cplx(nv.value), as_cplx(n.value), w,
                      m_count);
  return push(std::move(n));
}

Var Tape::reduce_sum(Var x) {
  const Node& nx_ = at(x);
  require(!nx_.is_complex, "reduce_sum: real tensors only");
  Node n;
  n.op = Op::ReduceSum;
  n.a = x.id;
  n.shape = {1};
  n.needs_grad = nx_.needs_grad;
  double s = 0.0;
  for (double v : nx_.value) s += v;
  n.value = {s};
  return push(std::move(n));
}

Var Tape::l2_norm(Var x) {
  const Node& nx_ = at(x);
  require(!nx_.is_complex, "l2_norm: real tensors only");
  Node n;
  n.op = Op::L2Norm;
  n.a = x.id;
  n.shape = {1};
  n.needs_grad = nx_.needs_grad;
  double s = 0.0;
  for (double v : nx_.value) s += v * v;
  n.value = {std::sqrt(s)};
  return push(std::move(n));
}

Var Tape::dot_ri(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require(na.shape == nb.shape && na.is_complex == nb.is_complex,
          "dot_ri: shape mismatch " + shape_string(na.shape) + " vs " + shape_string(nb.shape));
  Node n;
  n.op = Op::DotRI;
  n.a = a.id;
  n.b = b.id;
  n.shape = {1};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  double s = 0.0;
  for (size_t i = 0; i < na.value.size(); ++i) s += na.value[i] * nb.value[i];
  n.value = {s};
  return push(std::move(n));
}

std::span<const double> Tape::value(Var v) const { return at(v).value; }

std::span<const double> Tape::grad(Var v) {
  Node& n = at(v);
  if (n.adjoint.empty()) n.adjoint.assign(n.value.size(), 0.0);
  return n.adjoint;
}

const std::vector<int>& Tape::shape(Var v) const { return at(v).shape; }
bool Tape::is_complex(Var v) const { return at(v).is_complex; }

void Tape::backward(Var root) {
  if (backward_done_)
    throw std::logic_error("Tape::backward: called twice without rebuilding the tape");
  Node& r = at(root);
  if (r.is_complex || numel_of(r.shape) != 1)
    throw std::invalid_argument("Tape::backward: root must be a real scalar, got " +
                                shape_string(r.shape));
  backward_done_ = true;
  if (!r.needs_grad) return;
  r.adjoint = {1.0};

  auto adj = [&](int id) -> std::vector<double>& {
    Node& n = nodes_[id];
    if (n.adjoint.empty()) n.adjoint.assign(n.value.size(), 0.0);
    return n.adjoint;
  };
  auto wants = [&](int id) { return id >= 0 && nodes_[id].needs_grad; };

  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.adjoint.empty()) continue;
    const std::vector<double>& g = n.adjoint;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add: {
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (wants(n.b)) {
          auto& gb = adj(n.b);
          for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
        break;
      }
      case Op::Sub: {
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (wants(n.b)) {
          auto& gb = adj(n.b);
          for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
        break;
      }
      case Op::Mul: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * nb.value[i];
        }
        if (wants(n.b)) {
          auto& gb = adj(n.b);
          for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * na.value[i];
        }
        break;
      }
      case Op::ComplexMul: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        const cplx* gc = as_cplx(n.adjoint);
        const int64_t count = numel_of(n.shape);
        if (wants(n.a)) {
          cplx* ga = as_cplx(adj(n.a));
          const cplx* pb = as_cplx(nb.value);
          for (int64_t i = 0; i < count; ++i) ga[i] += std::conj(pb[i]) * gc[i];
        }
        if (wants(n.b)) {
          cplx* gb = as_cplx(adj(n.b));
          const cplx* pa = as_cplx(na.value);
          for (int64_t i = 0; i < count; ++i) gb[i] += std::conj(pa[i]) * gc[i];
        }
        break;
      }
      case Op::MatMul: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        const int m = na.shape[0];
        const int k = na.shape[1];
        const int ncols = nb.shape.size() == 2 ? nb.shape[1] : 1;
        if (wants(n.a))
          kern::matmul_a_bt_acc(g.data(), nb.value.data(), adj(n.a).data(), m, k, ncols);
        if (wants(n.b))
          kern::matmul_at_b_acc(na.value.data(), g.data(), adj(n.b).data(), m, k, ncols);
        break;
      }
      case Op::BiasRows: {
        const int rows = n.shape[0], cols = n.shape[1];
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (wants(n.b)) {
          auto& gb = adj(n.b);
          for (int i = 0; i < rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols; ++j) s += g[static_cast<size_t>(i) * cols + j];
            gb[i] += s;
          }
        }
        break;
      }
      case Op::Relu: {
        if (wants(n.a))
          kern::relu_mask_acc(nodes_[n.a].value.data(), g.data(), adj(n.a).data(), g.size());
        break;
      }
      case Op::Tanh: {
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        }
        break;
      }
      case Op::Scale: {
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.scalar;
        }
        break;
      }
      case Op::Reshape: {
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        break;
      }
      case Op::ConcatRows: {
        const Node& na = nodes_[n.a];
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        }
        if (wants(n.b)) {
          auto& gb = adj(n.b);
          const size_t off = na.value.size();
          for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[off + i];
        }
        break;
      }
      case Op::Rfft: {
        // x real, y = F(x): xbar += Re(F^H ybar) = Re(unnormalized backward(ybar))
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          const int64_t spatial = static_cast<int64_t>(n.nx) * n.ny;
          const int channels = static_cast<int>(numel_of(n.shape) / spatial);
          std::vector<cplx> buf(spatial);
          const cplx* gy = as_cplx(n.adjoint);
          for (int c = 0; c < channels; ++c) {
            fftk::backward(gy + c * spatial, buf.data(), n.nx, n.ny);
            double* dst = ga.data() + c * spatial;
            for (int64_t i = 0; i < spatial; ++i) dst[i] += buf[i].real();
          }
        }
        break;
      }
      case Op::Irfft: {
        // y = Re(F^{-1} c): cbar += (1/S) F(ybar)
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          const int64_t spatial = static_cast<int64_t>(n.nx) * n.ny;
          const int channels = static_cast<int>(numel_of(n.shape) / spatial);
          const double s = 1.0 / static_cast<double>(spatial);
          std::vector<cplx> in(spatial), out(spatial);
          cplx* gc = as_cplx(ga);
          for (int c = 0; c < channels; ++c) {
            for (int64_t i = 0; i < spatial; ++i) in[i] = g[c * spatial + i];
            fftk::forward(in.data(), out.data(), n.nx, n.ny);
            for (int64_t i = 0; i < spatial; ++i) gc[c * spatial + i] += out[i] * s;
          }
        }
        break;
      }
      case Op::ModeSelect: {
        if (wants(n.a)) {
          const Node& na = nodes_[n.a];
          const int channels = na.shape.size() >= 2 ? na.shape[0] : 1;
          const int spatial = static_cast<int>(numel_of(na.shape)) / channels;
          const int m_count = static_cast<int>(n.modes.size());
          cplx* ga = as_cplx(adj(n.a));
          const cplx* gy = as_cplx(n.adjoint);
          for (int c = 0; c < channels; ++c)
            for (int m = 0; m < m_count; ++m)
              ga[static_cast<size_t>(c) * spatial + n.modes[m]] +=
                  gy[static_cast<size_t>(c) * m_count + m];
        }
        break;
      }
      case Op::ModeScatter: {
        if (wants(n.a)) {
          const Node& na = nodes_[n.a];
          const int channels = na.shape.size() >= 2 ? na.shape[0] : 1;
          const int spatial = n.nx * n.ny;
          const int m_count = static_cast<int>(n.modes.size());
          cplx* ga = as_cplx(adj(n.a));
          const cplx* gy = as_cplx(n.adjoint);
          for (int c = 0; c < channels; ++c)
            for (int m = 0; m < m_count; ++m)
              ga[static_cast<size_t>(c) * m_count + m] +=
                  gy[static_cast<size_t>(c) * spatial + n.modes[m]];
        }
        break;
      }
      case Op::ModeMatmul: {
        const Node& nre = nodes_[n.a];
        const Node& nim = nodes_[n.b];
        const Node& nv = nodes_[n.c];
        const int m_count = nre.shape[0];
        const int w = nre.shape[1];
        const cplx* gy = as_cplx(n.adjoint);
        const cplx* pv = as_cplx(nv.value);
        const bool want_r = wants(n.a) || wants(n.b);
        double* gre = wants(n.a) ? adj(n.a).data() : nullptr;
        double* gim = wants(n.b) ? adj(n.b).data() : nullptr;
        cplx* gv = wants(n.c) ? as_cplx(adj(n.c)) : nullptr;
        for (int m = 0; m < m_count; ++m) {
          const double* rre = nre.value.data() + static_cast<size_t>(m) * w * w;
          const double* rim = nim.value.data() + static_cast<size_t>(m) * w * w;
          for (int o = 0; o < w; ++o) {
            const cplx go = gy[static_cast<size_t>(o) * m_count + m];
            if (go == cplx(0.0, 0.0)) continue;
            for (int i = 0; i < w; ++i) {
              const cplx vi = pv[static_cast<size_t>(i) * m_count + m];
              if (want_r) {
                const cplx gr = go * std::conj(vi);
                const size_t ridx = (static_cast<size_t>(m) * w + o) * w + i;
                if (gre) gre[ridx] += gr.real();
                if (gim) gim[ridx] += gr.imag();
              }
              if (gv) {
                const cplx r(rre[static_cast<size_t>(o) * w + i],
                             rim[static_cast<size_t>(o) * w + i]);
                gv[static_cast<size_t>(i) * m_count + m] += std::conj(r) * go;
              }
            }
          }
        }
        break;
      }
      case Op::ReduceSum: {
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          const double s = g[0];
          for (auto& v : ga) v += s;
        }
        break;
      }
      case Op::L2Norm: {
        if (wants(n.a) && n.value[0] > 0.0) {
          auto& ga = adj(n.a);
          const Node& na = nodes_[n.a];
          const double s = g[0] / n.value[0];
          for (size_t i = 0; i < ga.size(); ++i) ga[i] += s * na.value[i];
        }
        break;
      }
      case Op::DotRI: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        const double s = g[0];
        if (wants(n.a)) {
          auto& ga = adj(n.a);
          for (size_t i = 0; i < ga.size(); ++i) ga[i] += s * nb.value[i];
        }
        if (wants(n.b)) {
          auto& gb = adj(n.b);
          for (size_t i = 0; i < gb.size(); ++i) gb[i] += s * na.value[i];
        }
        break;
      }
    }
  }
}

double finite_difference_check(std::span<Tensor* const> params,
                               const std::function<Var(Tape&, std::span<const Var>)>& program,
                               const FdOptions& opt) {
  for (Tensor* t : params) {
    if (t->is_complex)
      throw std::invalid_argument(
          "finite_difference_check: complex parameters must be split into real parts");
    t->requires_grad = true;
  }

  auto run = [&](bool want_grads, std::vector<std::vector<double>>* grads_out) -> double {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (Tensor* t : params) vars.push_back(tape.leaf(*t));
    Var root = program(tape, vars);
    if (tape.is_complex(root) || tape.value(root).size() != 1)
      throw std::invalid_argument("finite_difference_check: program must return a real scalar");
    const double f = tape.value(root)[0];
    if (want_grads) {
      tape.backward(root);
      grads_out->clear();
      for (Var v : vars) {
        auto g = tape.grad(v);
        grads_out->emplace_back(g.begin(), g.end());
      }
    }
    return f;
  };

  std::vector<std::vector<double>> grads;
  run(true, &grads);

  int64_t total = 0;
  std::vector<int64_t> offsets(params.size());
  for (size_t p = 0; p < params.size(); ++p) {
    offsets[p] = total;
    total += params[p]->numel();
  }

  std::vector<int64_t> coords;
  if (total <= opt.max_coords) {
    coords.resize(total);
    std::iota(coords.begin(), coords.end(), 0);
  } else {
    Rng rng(opt.seed);
    std::vector<int64_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    std::sample(all.begin(), all.end(), std::back_inserter(coords), opt.max_coords, rng);
  }

  struct Pair {
    double g, fd;
  };
  std::vector<Pair> pairs;
  pairs.reserve(coords.size());
  for (int64_t flat : coords) {
    size_t p = 0;
    while (p + 1 < params.size() && offsets[p + 1] <= flat) ++p;
    const int64_t i = flat - offsets[p];
    if (opt.skip && opt.skip(static_cast<int>(p), i)) continue;
    double& x = params[p]->data[i];
    const double saved = x;
    x = saved + opt.eps;
    const double fp = run(false, nullptr);
    x = saved - opt.eps;
    const double fm = run(false, nullptr);
    x = saved;
    pairs.push_back({grads[p][i], (fp - fm) / (2.0 * opt.eps)});
  }

  double gmax = 0.0;
  for (const auto& pr : pairs) gmax = std::max({gmax, std::abs(pr.g), std::abs(pr.fd)});
  if (gmax == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& pr : pairs) {
    const double denom = std::max({std::abs(pr.g), std::abs(pr.fd), 1e-3 * gmax});
    worst = std::max(worst, std::abs(pr.g - pr.fd) / denom);
  }
  return worst;
}

}  // namespace noda::ad
