#include "noda/assimilation.hpp"

#include <cmath>

#include "noda/kernels.hpp"

namespace noda {

std::vector<double> estimate_measurement(const MeasurementNetParams& enet,
                                         std::span<const double> z) {
  if (static_cast<int>(z.size()) != enet.d)
    throw ShapeError("estimate_measurement: field size " + std::to_string(z.size()) +
                     " does not match d=" + std::to_string(enet.d));
  std::vector<double> h(enet.hidden);
  kern::matmul(enet.l1_w.data.data(), z.data(), h.data(), enet.hidden, enet.d, 1);
  for (int i = 0; i < enet.hidden; ++i) h[i] += enet.l1_b.data[i];
  kern::relu(h.data(), h.data(), h.size());
  std::vector<double> y(enet.p);
  kern::matmul(enet.l2_w.data.data(), h.data(), y.data(), enet.p, enet.hidden, 1);
  for (int i = 0; i < enet.p; ++i) y[i] += enet.l2_b.data[i];
  return y;
}

std::vector<double> gain_apply(const GainParams& gain, const MeasurementOperator& op,
                               std::span<const double> e_pred, std::span<const double> y,
                               std::span<const double> u) {
  if (static_cast<int>(u.size()) != gain.p || static_cast<int>(y.size()) != gain.p ||
      static_cast<int>(e_pred.size()) != gain.p)
    throw ShapeError("gain_apply: p-vectors expected, got e=" + std::to_string(e_pred.size()) +
                     " y=" + std::to_string(y.size()) + " u=" + std::to_string(u.size()) +
                     " for p=" + std::to_string(gain.p));
  const int d = gain.d, p = gain.p;
  std::vector<double> gate(d);
  kern::matmul(gain.w_z.data.data(), e_pred.data(), gate.data(), d, p, 1);
  std::vector<double> wy(d);
  kern::matmul(gain.w_y.data.data(), y.data(), wy.data(), d, p, 1);
  for (int i = 0; i < d; ++i) gate[i] = gate[i] + wy[i] + gain.b.data[i];
  kern::tanh_eval(gate.data(), gate.data(), gate.size());

  std::vector<double> lifted;
  if (gain.cstar_learnable) {
    lifted.resize(d);
    kern::matmul(gain.cstar.data.data(), u.data(), lifted.data(), d, p, 1);
  } else {
    lifted = op.apply_transpose(u);
  }
  for (int i = 0; i < d; ++i) gate[i] *= lifted[i];
  return gate;
}

std::vector<double> correct_step(const NodaParams& params, const MeasurementOperator& op,
                                 std::span<const double> z_pred, std::span<const double> y) {
  const auto e = estimate_measurement(params.enet, z_pred);
  std::vector<double> u(e.size());
  for (size_t i = 0; i < u.size(); ++i) u[i] = y[i] - e[i];
  const auto corr = gain_apply(params.gain, op, e, y, u);
  std::vector<double> z(z_pred.begin(), z_pred.end());
  for (size_t i = 0; i < z.size(); ++i) z[i] += corr[i];
  return z;
}

Trajectory assimilation_rollout(const NodaParams& params, const MeasurementOperator& op,
                                std::span<const double> z0, const ObservationSet& obs,
                                const Schedule& schedule, const Trajectory& reference) {
  const int nx = reference.nx, ny = reference.ny;
  if (static_cast<int>(z0.size()) != nx * ny)
    throw ShapeError("assimilation_rollout: z0 size " + std::to_string(z0.size()) +
                     " does not match grid " + std::to_string(nx) + "x" + std::to_string(ny));
  Trajectory est;
  est.equation = reference.equation;
  est.nx = nx;
  est.ny = ny;
  est.h = reference.h;
  est.length_x = reference.length_x;
  est.length_y = reference.length_y;
  est.seed = reference.seed;
  est.n_frames = reference.n_frames;
  est.frames.reserve(reference.frames.size());

  RolloutState state;
  state.estimate.assign(z0.begin(), z0.end());
  state.schedule = &schedule;
  est.frames.insert(est.frames.end(), state.estimate.begin(), state.estimate.end());
  for (state.frame = 1; state.frame < reference.n_frames; ++state.frame) {
    std::vector<double> z_pred = predict_step(params.predictor, state.estimate, nx, ny);
    if (schedule.corrects_at(state.frame)) {
      auto y = obs.for_frame(state.frame);
      if (!y)
        throw std::invalid_argument("assimilation_rollout: missing observation at frame " +
                                    std::to_string(state.frame));
      state.estimate = correct_step(params, op, z_pred, *y);
    } else {
      state.estimate = std::move(z_pred);
    }
    est.frames.insert(est.frames.end(), state.estimate.begin(), state.estimate.end());
  }
  return est;
}

CorrectorVars bind_corrector(ad::Tape& tape, NodaParams& params, const MeasurementOperator& op) {
  CorrectorVars v;
  v.meta = &params;
  v.op = &op;
  v.l1_w = tape.leaf(params.enet.l1_w);
  v.l1_b = tape.leaf(params.enet.l1_b);
  v.l2_w = tape.leaf(params.enet.l2_w);
  v.l2_b = tape.leaf(params.enet.l2_b);
  v.w_z = tape.leaf(params.gain.w_z);
  v.w_y = tape.leaf(params.gain.w_y);
  v.b = tape.leaf(params.gain.b);
  if (params.gain.cstar_learnable) {
    v.cstar = tape.leaf(params.gain.cstar);
  } else if (op.kind == MeasurementOperator::Kind::DenseRandom) {
    // constant C^T, built once per tape
    const int d = op.d, p = op.p;
    std::vector<double> ct(static_cast<size_t>(d) * p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < d; ++j)
        ct[static_cast<size_t>(j) * p + i] = op.matrix[static_cast<size_t>(i) * d + j];
    v.cstar_fixed = tape.constant(ct, {d, p});
  }
  return v;
}

ad::Var estimate_measurement_tape(ad::Tape& tape, const CorrectorVars& vars, ad::Var z) {
  ad::Var h = tape.relu(tape.add(tape.matmul(vars.l1_w, z), vars.l1_b));
  return tape.add(tape.matmul(vars.l2_w, h), vars.l2_b);
}

ad::Var correct_step_tape(ad::Tape& tape, const CorrectorVars& vars, ad::Var z_pred,
                          ad::Var y_obs) {
  ad::Var e = estimate_measurement_tape(tape, vars, z_pred);
  ad::Var u = tape.sub(y_obs, e);
  ad::Var gate = tape.tanh(
      tape.add(tape.add(tape.matmul(vars.w_z, e), tape.matmul(vars.w_y, y_obs)), vars.b));
  ad::Var lifted;
  if (vars.meta->gain.cstar_learnable) {
    lifted = tape.matmul(vars.cstar, u);
  } else if (vars.op->kind == MeasurementOperator::Kind::Identity) {
    lifted = u;
  } else {
    lifted = tape.matmul(vars.cstar_fixed, u);
  }
  return tape.add(z_pred, tape.mul(gate, lifted));
}

MeasurementNetParams init_measurement_net(int d, int hidden, int p, Rng& rng) {
  MeasurementNetParams e;
  e.d = d;
  e.hidden = hidden;
  e.p = p;
  const double b1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  e.l1_w = Tensor::uniform({hidden, d}, rng, -b1, b1);
  e.l1_b = Tensor::zeros({hidden});
  e.l2_w = Tensor::uniform({p, hidden}, rng, -b2, b2);
  e.l2_b = Tensor::zeros({p});
  return e;
}

GainParams init_gain(int d, int p, bool cstar_learnable, Rng& rng) {
  GainParams g;
  g.d = d;
  g.p = p;
  g.cstar_learnable = cstar_learnable;
  const double bound = 1.0 / std::sqrt(static_cast<double>(p));
  g.w_z = Tensor::uniform({d, p}, rng, -bound, bound);
  g.w_y = Tensor::uniform({d, p}, rng, -bound, bound);
  g.b = Tensor::zeros({d});
  if (cstar_learnable) g.cstar = Tensor::uniform({d, p}, rng, -bound, bound);
  return g;
}

NodaParams init_noda(int width, int kmax, int spatial_rank, bool coord_channels, int d,
                     int e_hidden, int p, bool cstar_learnable, uint64_t seed) {
  Rng rng(seed);
  NodaParams n;
  n.predictor = init_predictor(width, kmax, spatial_rank, coord_channels, rng);
  n.enet = init_measurement_net(d, e_hidden, p, rng);
  n.gain = init_gain(d, p, cstar_learnable, rng);
  return n;
}

void for_each_param(NodaParams& p,
                    const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("predictor.P.weight", p.predictor.p_w);
  fn("predictor.P.bias", p.predictor.p_b);
  for (int l = 0; l < 4; ++l) {
    const std::string b = "predictor.block" + std::to_string(l);
    fn(b + ".W", p.predictor.blocks[l].w);
    fn(b + ".R_re", p.predictor.blocks[l].conv.r_re);
    fn(b + ".R_im", p.predictor.blocks[l].conv.r_im);
  }
  fn("predictor.Q.weight", p.predictor.q_w);
  fn("predictor.Q.bias", p.predictor.q_b);
  fn("E.l1.weight", p.enet.l1_w);
  fn("E.l1.bias", p.enet.l1_b);
  fn("E.l2.weight", p.enet.l2_w);
  fn("E.l2.bias", p.enet.l2_b);
  fn("gain.W_z", p.gain.w_z);
  fn("gain.W_y", p.gain.w_y);
  fn("gain.b", p.gain.b);
  if (p.gain.cstar_learnable) fn("gain.C_star", p.gain.cstar);
}

std::vector<Tensor*> param_list(NodaParams& p) {
  std::vector<Tensor*> out;
  for_each_param(p, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

}  // namespace noda
