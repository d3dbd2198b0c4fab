#include "noda/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "noda/model_io.hpp"

namespace noda {

namespace {

constexpr double kGradClipNorm = 1.0;

double parse_double(const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  return std::stod(v);
}

void apply_key(TrainConfig& cfg, const std::string& key, const nlohmann::json& v) {
  auto num = [&]() -> double {
    if (v.is_string()) return parse_double(v.get<std::string>());
    return v.get<double>();
  };
  if (key == "lr") cfg.lr = num();
  else if (key == "decay_factor") cfg.decay_factor = num();
  else if (key == "decay_every") cfg.decay_every = static_cast<int>(num());
  else if (key == "epochs") cfg.epochs = static_cast<int>(num());
  else if (key == "batch") cfg.batch = static_cast<int>(num());
  else if (key == "lambda") cfg.lambda = num();
  else if (key == "t_h_train") cfg.t_h_train = static_cast<int>(num());
  else if (key == "bptt_window") cfg.bptt_window = static_cast<int>(num());
  else if (key == "seed") cfg.seed = static_cast<uint64_t>(num());
  else if (key == "width") cfg.width = static_cast<int>(num());
  else if (key == "modes") cfg.modes = static_cast<int>(num());
  else if (key == "e_hidden") cfg.e_hidden = static_cast<int>(num());
  else if (key == "snr_db") cfg.snr_db = num();
  else if (key == "c_kind") cfg.c_kind = v.get<std::string>();
  else if (key == "p") cfg.p = static_cast<int>(num());
  else if (key == "coord_channels") cfg.coord_channels = v.is_boolean() ? v.get<bool>() : num() != 0;
  else if (key == "cstar_learnable") cfg.cstar_learnable = v.is_boolean() ? v.get<bool>() : num() != 0;
  else if (key == "seg_len") cfg.seg_len = static_cast<int>(num());
  else if (key == "threads") cfg.threads = static_cast<int>(num());
  else throw FormatError("train config: unknown key '" + key + "'");
}

}  // namespace

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  TrainConfig cfg;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j = nlohmann::json::parse(text);
    for (auto it = j.begin(); it != j.end(); ++it) apply_key(cfg, it.key(), it.value());
    return cfg;
  }
  // key=value lines; '#' starts a comment
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "c_kind")
      apply_key(cfg, key, nlohmann::json(val));
    else if (val == "true" || val == "false")
      apply_key(cfg, key, nlohmann::json(val == "true"));
    else
      apply_key(cfg, key, nlohmann::json(parse_double(val)));
  }
  return cfg;
}

int default_t_h_train(Equation eq) {
  switch (eq) {
    case Equation::NS: return 300;
    case Equation::KS: return 500;
    case Equation::KdV: return 80;
  }
  return 300;
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  const int steps = cfg.decay_every > 0 ? epoch / cfg.decay_every : 0;
  double lr = cfg.lr;
  for (int i = 0; i < steps; ++i) lr *= cfg.decay_factor;
  return lr;
}

double loss_J(const NodaParams& params, const Trajectory& estimate,
              const ObservationSet& measurements, const Trajectory& truth, double lambda,
              int t_h) {
  if (estimate.n_frames != truth.n_frames || estimate.frame_size() != truth.frame_size())
    throw ShapeError("loss_J: estimate/truth frame mismatch");
  const int n = estimate.n_frames - 1;
  if (n < 1) throw std::invalid_argument("loss_J: need at least one step");
  if (t_h == 0 && lambda > 0.0)
    throw std::invalid_argument("loss_J: t_h == 0 with lambda > 0 leaves the measurement term undefined");
  double rec = 0.0;
  for (int k = 1; k <= n; ++k) {
    auto e = estimate.frame(k);
    auto z = truth.frame(k);
    double s = 0.0;
    for (size_t i = 0; i < e.size(); ++i) {
      const double diff = e[i] - z[i];
      s += diff * diff;
    }
    rec += std::sqrt(s);
  }
  double meas = 0.0;
  for (int k = 1; k <= t_h; ++k) {
    auto y = measurements.for_frame(k);
    if (!y) throw std::invalid_argument("loss_J: missing observation at frame " + std::to_string(k));
    const auto e = estimate_measurement(params.enet, estimate.frame(k));
    double s = 0.0;
    for (size_t i = 0; i < e.size(); ++i) {
      const double diff = (*y)[i] - e[i];
      s += diff * diff;
    }
    meas += std::sqrt(s);
  }
  double j = rec / n;
  if (lambda > 0.0 && t_h > 0) j += lambda / t_h * meas;
  return j;
}

AdamState make_adam_state(std::span<Tensor* const> params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* t : params) {
    s.m.emplace_back(t->data.size(), 0.0);
    s.v.emplace_back(t->data.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const std::vector<double>> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t p = 0; p < params.size(); ++p) {
    auto& x = params[p]->data;
    auto& m = state.m[p];
    auto& v = state.v[p];
    const auto& g = grads[p];
    if (g.size() != x.size())
      throw std::invalid_argument("adam_step: gradient size mismatch for parameter " +
                                  std::to_string(p));
    for (size_t i = 0; i < x.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      x[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void save_optimizer_state(const std::filesystem::path& path, const AdamState& state) {
  std::vector<NamedBlob> blobs;
  blobs.push_back({"adam.t", {}, {static_cast<double>(state.t)}});
  for (size_t i = 0; i < state.m.size(); ++i) {
    blobs.push_back({"adam.m." + std::to_string(i),
                     {static_cast<int>(state.m[i].size())},
                     state.m[i]});
    blobs.push_back({"adam.v." + std::to_string(i),
                     {static_cast<int>(state.v[i].size())},
                     state.v[i]});
  }
  write_blob_file(path, blobs);
}

AdamState load_optimizer_state(const std::filesystem::path& path) {
  AdamState s;
  for (const auto& b : read_blob_file(path)) {
    if (b.name == "adam.t") {
      s.t = static_cast<int64_t>(b.payload[0]);
    } else if (b.name.starts_with("adam.m.")) {
      const size_t i = std::stoul(b.name.substr(7));
      if (s.m.size() <= i) s.m.resize(i + 1);
      s.m[i] = b.payload;
    } else if (b.name.starts_with("adam.v.")) {
      const size_t i = std::stoul(b.name.substr(7));
      if (s.v.size() <= i) s.v.resize(i + 1);
      s.v[i] = b.payload;
    }
  }
  return s;
}

BoundNoda bind_noda_from_vars(ad::Tape& tape, NodaParams& params, const MeasurementOperator& op,
                              std::span<const ad::Var> vars) {
  const size_t expected = param_list(params).size();
  if (vars.size() != expected)
    throw std::invalid_argument("bind_noda_from_vars: expected " + std::to_string(expected) +
                                " vars, got " + std::to_string(vars.size()));
  BoundNoda b;
  size_t i = 0;
  b.pred.meta = &params.predictor;
  b.pred.p_w = vars[i++];
  b.pred.p_b = vars[i++];
  for (int l = 0; l < 4; ++l) {
    b.pred.blocks[l].w = vars[i++];
    b.pred.blocks[l].r_re = vars[i++];
    b.pred.blocks[l].r_im = vars[i++];
  }
  b.pred.q_w = vars[i++];
  b.pred.q_b = vars[i++];
  b.corr.meta = &params;
  b.corr.op = &op;
  b.corr.l1_w = vars[i++];
  b.corr.l1_b = vars[i++];
  b.corr.l2_w = vars[i++];
  b.corr.l2_b = vars[i++];
  b.corr.w_z = vars[i++];
  b.corr.w_y = vars[i++];
  b.corr.b = vars[i++];
  if (params.gain.cstar_learnable) {
    b.corr.cstar = vars[i++];
  } else if (op.kind == MeasurementOperator::Kind::DenseRandom) {
    std::vector<double> ct(static_cast<size_t>(op.d) * op.p);
    for (int r = 0; r < op.p; ++r)
      for (int c = 0; c < op.d; ++c)
        ct[static_cast<size_t>(c) * op.p + r] = op.matrix[static_cast<size_t>(r) * op.d + c];
    b.corr.cstar_fixed = tape.constant(ct, {op.d, op.p});
  }
  b.leafs.assign(vars.begin(), vars.end());
  return b;
}

BoundNoda bind_noda(ad::Tape& tape, NodaParams& params, const MeasurementOperator& op) {
  std::vector<ad::Var> vars;
  for_each_param(params, [&](const std::string&, Tensor& t) { vars.push_back(tape.leaf(t)); });
  return bind_noda_from_vars(tape, params, op, vars);
}

ad::Var build_rollout_loss(ad::Tape& tape, const BoundNoda& bound, const Trajectory& traj,
                           const std::vector<double>& y_all, int start, int n_steps,
                           int warmup_h, double lambda, std::span<const double> z_init,
                           int from_step, int to_step, ad::Var* z_final) {
  const int spatial = traj.frame_size();
  const int p = static_cast<int>(y_all.size()) / traj.n_frames;
  ad::Var z = tape.constant(z_init, {spatial});
  ad::Var rec_sum, meas_sum;
  for (int r = from_step + 1; r <= to_step; ++r) {
    const int k = start + r;
    ad::Var z_pred = predict_step_tape(tape, bound.pred, z, traj.nx, traj.ny);
    ad::Var y_var;
    const bool corrected = r <= warmup_h;
    if (corrected) {
      std::span<const double> y(y_all.data() + static_cast<size_t>(k) * p,
                                static_cast<size_t>(p));
      y_var = tape.constant(y, {p});
      z = correct_step_tape(tape, bound.corr, z_pred, y_var);
    } else {
      z = z_pred;
    }
    ad::Var truth = tape.constant(traj.frame(k), {spatial});
    ad::Var rec = tape.l2_norm(tape.sub(z, truth));
    rec_sum = rec_sum.valid() ? tape.add(rec_sum, rec) : rec;
    if (corrected && lambda > 0.0) {
      ad::Var e_final = estimate_measurement_tape(tape, bound.corr, z);
      ad::Var meas = tape.l2_norm(tape.sub(y_var, e_final));
      meas_sum = meas_sum.valid() ? tape.add(meas_sum, meas) : meas;
    }
  }
  if (z_final) *z_final = z;
  ad::Var loss = tape.scale(rec_sum, 1.0 / n_steps);
  if (meas_sum.valid()) loss = tape.add(loss, tape.scale(meas_sum, lambda / warmup_h));
  return loss;
}

double segment_loss_grad(NodaParams& params, const MeasurementOperator& op,
                         const Trajectory& traj, const std::vector<double>& y_all, int start,
                         int n_steps, int warmup_h, double lambda, int bptt_window,
                         std::vector<std::vector<double>>* grad_acc) {
  if (start < 0 || start + n_steps >= traj.n_frames)
    throw std::invalid_argument("segment_loss_grad: segment exceeds trajectory");
  const int window = bptt_window > 0 ? bptt_window : n_steps;
  std::vector<double> z_carry(traj.frame(start).begin(), traj.frame(start).end());
  double total = 0.0;
  for (int from = 0; from < n_steps; from += window) {
    const int to = std::min(from + window, n_steps);
    ad::Tape tape;
    BoundNoda bound = bind_noda(tape, params, op);
    ad::Var z_final;
    ad::Var loss = build_rollout_loss(tape, bound, traj, y_all, start, n_steps, warmup_h, lambda,
                                      z_carry, from, to, &z_final);
    total += tape.value(loss)[0];
    if (grad_acc) {
      tape.backward(loss);
      for (size_t i = 0; i < bound.leafs.size(); ++i) {
        auto g = tape.grad(bound.leafs[i]);
        auto& acc = (*grad_acc)[i];
        for (size_t j = 0; j < g.size(); ++j) acc[j] += g[j];
      }
    }
    auto zv = tape.value(z_final);
    z_carry.assign(zv.begin(), zv.end());
  }
  return total;
}

TrainResult train(const std::vector<Trajectory>& data, const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const Trajectory& first = data.front();
  const int d = first.frame_size();
  for (const auto& t : data)
    if (t.frame_size() != d || t.spatial_rank() != first.spatial_rank())
      throw ShapeError("train: trajectories disagree on grid shape");

  const int p = cfg.p > 0 ? cfg.p : d;
  MeasurementOperator op = cfg.c_kind == "identity"
                               ? MeasurementOperator::identity(d)
                               : MeasurementOperator::dense_random(p, d, derive_seed(cfg.seed, 1));
  if (cfg.c_kind != "identity" && cfg.c_kind != "random")
    throw std::invalid_argument("train: c_kind must be identity|random");

  TrainResult result;
  result.op = op;
  result.params =
      init_noda(cfg.width, cfg.modes, first.spatial_rank(), cfg.coord_channels, d, cfg.e_hidden,
                op.p, cfg.cstar_learnable, derive_seed(cfg.seed, 2));
  NodaParams& params = result.params;
  auto plist = param_list(params);
  for (Tensor* t : plist) t->requires_grad = true;
  AdamState adam = make_adam_state(plist);

  const int t_h_cfg = cfg.t_h_train >= 0 ? cfg.t_h_train : default_t_h_train(first.equation);

  // Fixed noisy measurement dataset, drawn once per trajectory.
  std::vector<std::vector<double>> y_all(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    std::vector<double> clean;
    clean.reserve(static_cast<size_t>(data[i].n_frames) * op.p);
    for (int k = 0; k < data[i].n_frames; ++k) {
      auto row = op.apply(data[i].frame(k));
      clean.insert(clean.end(), row.begin(), row.end());
    }
    y_all[i] = add_noise_snr(clean, cfg.snr_db, derive_seed(cfg.seed, 1000 + i));
  }

  struct Segment {
    int traj;
    int start;
    int steps;
    int warmup;
  };

  const int threads = std::max(1, cfg.threads);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, 3000 + static_cast<uint64_t>(epoch)));
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Segment> segments;
    segments.reserve(order.size());
    for (int idx : order) {
      const int n_frames = data[idx].n_frames;
      int steps = n_frames - 1;
      int start = 0;
      if (cfg.seg_len > 1 && cfg.seg_len < n_frames) {
        steps = cfg.seg_len - 1;
        std::uniform_int_distribution<int> pick(0, n_frames - cfg.seg_len);
        start = pick(rng);
      }
      segments.push_back({idx, start, steps, std::min(t_h_cfg, steps)});
    }

    double epoch_loss = 0.0;
    int epoch_segments = 0;
    const double lr = lr_at_epoch(cfg, epoch);
    for (size_t b0 = 0; b0 < segments.size(); b0 += cfg.batch) {
      const size_t b1 = std::min(b0 + cfg.batch, segments.size());
      const int count = static_cast<int>(b1 - b0);

      std::vector<std::vector<std::vector<double>>> grads(threads);
      std::vector<double> losses(threads, 0.0);
      for (auto& g : grads) {
        g.reserve(plist.size());
        for (Tensor* t : plist) g.emplace_back(t->data.size(), 0.0);
      }
      auto run_chunk = [&](int tid) {
        for (size_t s = b0 + tid; s < b1; s += threads) {
          const Segment& seg = segments[s];
          losses[tid] += segment_loss_grad(params, op, data[seg.traj], y_all[seg.traj], seg.start,
                                           seg.steps, seg.warmup, cfg.lambda, cfg.bptt_window,
                                           &grads[tid]);
        }
      };
      if (threads == 1) {
        run_chunk(0);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(run_chunk, t);
        for (auto& t : pool) t.join();
      }

      double batch_loss = 0.0;
      for (int t = 0; t < threads; ++t) batch_loss += losses[t];
      batch_loss /= count;
      if (!std::isfinite(batch_loss))
        throw NumericError("train: NaN loss at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(b0 / cfg.batch));
      epoch_loss += batch_loss * count;
      epoch_segments += count;

      // ordered reduction over thread chunks, then mean over the batch
      auto& total = grads[0];
      for (int t = 1; t < threads; ++t)
        for (size_t pidx = 0; pidx < total.size(); ++pidx)
          for (size_t j = 0; j < total[pidx].size(); ++j) total[pidx][j] += grads[t][pidx][j];
      const double inv_count = 1.0 / count;
      double norm_sq = 0.0;
      for (auto& g : total)
        for (auto& v : g) {
          v *= inv_count;
          norm_sq += v * v;
        }
      const double norm = std::sqrt(norm_sq);
      if (norm > kGradClipNorm) {
        const double scale = kGradClipNorm / norm;
        for (auto& g : total)
          for (auto& v : g) v *= scale;
      }
      adam_step(plist, total, adam, lr);
    }
    result.loss_history.push_back(epoch_loss / epoch_segments);
  }
  result.adam = std::move(adam);
  return result;
}

}  // namespace noda
