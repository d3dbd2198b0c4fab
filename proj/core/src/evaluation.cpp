#include "noda/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "noda/model_io.hpp"
#include "noda/solvers.hpp"

namespace noda {

namespace {

double sq_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sq(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double relmse_impl(const Trajectory& estimate, const Trajectory& truth, int from_frame,
                   int to_frame, const std::vector<int>* excluded) {
  if (estimate.n_frames != truth.n_frames || estimate.frame_size() != truth.frame_size())
    throw ShapeError("relmse: estimate and truth frames are not aligned");
  if (from_frame < 0 || to_frame >= truth.n_frames || from_frame > to_frame)
    throw std::invalid_argument("relmse: bad frame window [" + std::to_string(from_frame) + ", " +
                                std::to_string(to_frame) + "]");
  double num = 0.0, den = 0.0;
  for (int k = from_frame; k <= to_frame; ++k) {
    if (excluded && std::binary_search(excluded->begin(), excluded->end(), k)) continue;
    num += sq_diff(truth.frame(k), estimate.frame(k));
    den += sq(truth.frame(k));
  }
  if (den == 0.0) throw NumericError("relmse: zero-power ground truth over the window");
  return num / den;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

struct Stats {
  double mean = 0.0, stdev = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(acc / (xs.size() - 1));
  }
  return s;
}

std::vector<Trajectory> load_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".noda") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError("no .noda trajectories in " + dir.string());
  std::vector<Trajectory> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_trajectory(f));
  return out;
}

int frames_for_seconds(double seconds, double h) {
  const double r = seconds / h;
  const long long f = std::llround(r);
  if (std::abs(r - f) > 1e-9)
    throw std::invalid_argument("time " + std::to_string(seconds) +
                                " is not a multiple of the frame step " + std::to_string(h));
  return static_cast<int>(f);
}

MeasurementOperator op_for(const std::string& c_kind, int d, uint64_t seed) {
  if (c_kind == "identity") return MeasurementOperator::identity(d);
  if (c_kind == "random") return MeasurementOperator::dense_random(d, d, seed);
  throw std::invalid_argument("measurement operator must be identity|random, got " + c_kind);
}

struct EvalContext {
  NodaParams params;
  std::vector<Trajectory> test;
  MeasurementOperator op;
  int t_h_frames;
};

EvalContext make_context(const ExperimentSpec& spec) {
  EvalContext ctx{load_model(spec.model), load_dir(spec.data_dir), {}, 0};
  const int d = ctx.test.front().frame_size();
  const uint64_t base = spec.seeds.empty() ? 0 : spec.seeds.front();
  ctx.op = op_for(spec.c_kind, d, derive_seed(base, 11));
  if (ctx.params.enet.d != d)
    throw std::invalid_argument("experiment: model expects d=" + std::to_string(ctx.params.enet.d) +
                                " but data has d=" + std::to_string(d));
  ctx.t_h_frames = frames_for_seconds(spec.t_h_seconds, ctx.test.front().h);
  return ctx;
}

}  // namespace

double relmse(const Trajectory& estimate, const Trajectory& truth, int from_frame, int to_frame) {
  return relmse_impl(estimate, truth, from_frame, to_frame, nullptr);
}

double relmse_excluding(const Trajectory& estimate, const Trajectory& truth, int from_frame,
                        int to_frame, const std::vector<int>& excluded) {
  return relmse_impl(estimate, truth, from_frame, to_frame, &excluded);
}

void emit_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f << "method,equation,t_f,snr_db,alpha,t_h,relmse_mean,relmse_std,time_per_step\n";
  for (const auto& r : rows) {
    f << r.method << ',' << r.equation << ',' << fmt(r.t_f) << ',' << fmt(r.snr_db) << ','
      << fmt(r.alpha) << ',' << fmt(r.t_h) << ',' << fmt(r.relmse_mean) << ','
      << fmt(r.relmse_std) << ',' << fmt(r.time_per_step) << '\n';
  }
  if (!f) throw FormatError("short write to " + path.string());
}

void emit_heatmap_data(const Trajectory& estimate, const Trajectory& truth,
                       const std::filesystem::path& path) {
  if (estimate.n_frames != truth.n_frames || estimate.frame_size() != truth.frame_size())
    throw ShapeError("emit_heatmap_data: estimate and truth are not aligned");
  Trajectory err = truth;
  for (size_t i = 0; i < err.frames.size(); ++i)
    err.frames[i] = std::abs(estimate.frames[i] - truth.frames[i]);
  write_trajectory(path, err);
}

Trajectory persistence_rollout(const Trajectory& truth, int start_frame) {
  Trajectory est = truth;
  const auto held = truth.frame(start_frame);
  for (int k = start_frame + 1; k < truth.n_frames; ++k)
    std::copy(held.begin(), held.end(), est.frame(k).begin());
  return est;
}

Trajectory prediction_only_rollout(const NodaParams& params, const Trajectory& truth,
                                   int start_frame) {
  Trajectory est = truth;
  std::vector<double> z(truth.frame(start_frame).begin(), truth.frame(start_frame).end());
  for (int k = start_frame + 1; k < truth.n_frames; ++k) {
    z = predict_step(params.predictor, z, truth.nx, truth.ny);
    std::copy(z.begin(), z.end(), est.frame(k).begin());
  }
  return est;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  ExperimentSpec spec;
  auto as_list = [](const nlohmann::json& v) {
    std::vector<double> out;
    auto one = [&](const nlohmann::json& x) {
      if (x.is_string()) {
        const auto s = x.get<std::string>();
        out.push_back(s == "inf" ? std::numeric_limits<double>::infinity() : std::stod(s));
      } else {
        out.push_back(x.get<double>());
      }
    };
    if (v.is_array())
      for (const auto& x : v) one(x);
    else
      one(v);
    return out;
  };
  spec.equation = equation_from_name(j.at("equation").get<std::string>());
  spec.model = j.at("model").get<std::string>();
  spec.data_dir = j.at("data").get<std::string>();
  spec.t_f_list = as_list(j.at("t_f"));
  spec.snr_list = as_list(j.at("snr_db"));
  spec.alpha_list = j.contains("alpha") ? as_list(j["alpha"]) : std::vector<double>{0.0};
  spec.t_h_seconds = j.at("t_h").get<double>();
  if (j.contains("t_h_sweep")) spec.t_h_sweep = as_list(j["t_h_sweep"]);
  if (j.contains("seeds"))
    for (const auto& s : j["seeds"]) spec.seeds.push_back(s.get<uint64_t>());
  if (spec.seeds.empty()) spec.seeds.push_back(0);
  if (j.contains("c_kind")) spec.c_kind = j["c_kind"].get<std::string>();
  if (j.contains("exclude_observed")) spec.exclude_observed = j["exclude_observed"].get<bool>();
  if (j.contains("protocols"))
    for (const auto& p : j["protocols"]) spec.protocols.push_back(p.get<std::string>());
  else
    spec.protocols = {"prediction", "assimilation", "warmup"};
  if (spec.t_f_list.empty() || spec.snr_list.empty())
    throw FormatError(path.string() + ": t_f and snr_db must be non-empty");
  return spec;
}

std::vector<MetricRow> experiment_prediction(const ExperimentSpec& spec) {
  EvalContext ctx = make_context(spec);
  const double h = ctx.test.front().h;
  const int t_h = ctx.t_h_frames;
  std::vector<MetricRow> rows;

  // Baselines are measurement-free; score them once per t_f.
  std::vector<Trajectory> pred_only;
  pred_only.reserve(ctx.test.size());
  for (const auto& traj : ctx.test) pred_only.push_back(prediction_only_rollout(ctx.params, traj, t_h));

  for (double t_f : spec.t_f_list) {
    const int to = frames_for_seconds(t_f, h);
    std::vector<double> persist_scores, pred_scores;
    for (size_t i = 0; i < ctx.test.size(); ++i) {
      persist_scores.push_back(relmse(persistence_rollout(ctx.test[i], t_h), ctx.test[i], t_h + 1, to));
      pred_scores.push_back(relmse(pred_only[i], ctx.test[i], t_h + 1, to));
    }
    const Stats ps = stats_of(persist_scores);
    const Stats qs = stats_of(pred_scores);
    rows.push_back({"persistence", equation_name(spec.equation), t_f,
                    std::numeric_limits<double>::infinity(), 0.0, spec.t_h_seconds, ps.mean,
                    ps.stdev, 0.0});
    rows.push_back({"prediction_only", equation_name(spec.equation), t_f,
                    std::numeric_limits<double>::infinity(), 0.0, spec.t_h_seconds, qs.mean,
                    qs.stdev, 0.0});
  }

  for (double snr : spec.snr_list) {
    // One full-horizon rollout per (trajectory, seed); scored per t_f window.
    std::vector<Trajectory> estimates;
    for (uint64_t seed : spec.seeds) {
      for (size_t i = 0; i < ctx.test.size(); ++i) {
        const Trajectory& traj = ctx.test[i];
        Schedule sched;
        sched.t_h = t_h;
        sched.alpha = 0.0;
        auto obs = make_observations(traj, ctx.op, sched.observed_frames(), snr,
                                     derive_seed(seed, 100 + i));
        estimates.push_back(
            assimilation_rollout(ctx.params, ctx.op, traj.frame(0), obs, sched, traj));
      }
    }
    for (double t_f : spec.t_f_list) {
      const int to = frames_for_seconds(t_f, h);
      std::vector<double> scores;
      size_t e = 0;
      for (size_t s = 0; s < spec.seeds.size(); ++s)
        for (size_t i = 0; i < ctx.test.size(); ++i, ++e)
          scores.push_back(relmse(estimates[e], ctx.test[i], t_h + 1, to));
      const Stats st = stats_of(scores);
      rows.push_back({"noda", equation_name(spec.equation), t_f, snr, 0.0, spec.t_h_seconds,
                      st.mean, st.stdev, 0.0});
    }
  }
  return rows;
}

std::vector<MetricRow> experiment_assimilation(const ExperimentSpec& spec) {
  EvalContext ctx = make_context(spec);
  const double h = ctx.test.front().h;
  const int t_h = ctx.t_h_frames;
  std::vector<MetricRow> rows;
  for (double snr : spec.snr_list) {
    for (double alpha : spec.alpha_list) {
      for (double t_f : spec.t_f_list) {
        const int to = frames_for_seconds(t_f, h);
        std::vector<double> scores;
        for (uint64_t seed : spec.seeds) {
          for (size_t i = 0; i < ctx.test.size(); ++i) {
            const Trajectory& traj = ctx.test[i];
            Schedule sched = sample_schedule(t_h, to, alpha, derive_seed(seed, 500 + i));
            auto obs = make_observations(traj, ctx.op, sched.observed_frames(), snr,
                                         derive_seed(seed, 100 + i));
            Trajectory est =
                assimilation_rollout(ctx.params, ctx.op, traj.frame(0), obs, sched, traj);
            scores.push_back(spec.exclude_observed
                                 ? relmse_excluding(est, traj, t_h + 1, to, sched.assim_times)
                                 : relmse(est, traj, t_h + 1, to));
          }
        }
        const Stats st = stats_of(scores);
        rows.push_back({"noda", equation_name(spec.equation), t_f, snr, alpha, spec.t_h_seconds,
                        st.mean, st.stdev, 0.0});
      }
    }
  }
  return rows;
}

std::vector<MetricRow> experiment_warmup(const ExperimentSpec& spec) {
  EvalContext ctx = make_context(spec);
  const double h = ctx.test.front().h;
  const double t_f = spec.t_f_list.front();
  const int to = frames_for_seconds(t_f, h);
  std::vector<MetricRow> rows;
  const auto& sweep = spec.t_h_sweep.empty() ? std::vector<double>{spec.t_h_seconds}
                                             : spec.t_h_sweep;
  for (double snr : spec.snr_list) {
    for (double t_h_s : sweep) {
      const int t_h = frames_for_seconds(t_h_s, h);
      std::vector<double> scores;
      for (uint64_t seed : spec.seeds) {
        for (size_t i = 0; i < ctx.test.size(); ++i) {
          const Trajectory& traj = ctx.test[i];
          Schedule sched;
          sched.t_h = t_h;
          auto obs = make_observations(traj, ctx.op, sched.observed_frames(), snr,
                                       derive_seed(seed, 100 + i));
          Trajectory est =
              assimilation_rollout(ctx.params, ctx.op, traj.frame(0), obs, sched, traj);
          scores.push_back(relmse(est, traj, t_h + 1, to));
        }
      }
      const Stats st = stats_of(scores);
      rows.push_back({"noda", equation_name(spec.equation), t_f, snr, 0.0, t_h_s, st.mean,
                      st.stdev, 0.0});
    }
  }
  return rows;
}

std::pair<Trajectory, Trajectory> sample_rollout(const ExperimentSpec& spec, double alpha,
                                                 double snr) {
  EvalContext ctx = make_context(spec);
  const Trajectory& truth = ctx.test.front();
  Schedule sched;
  if (alpha > 0.0) {
    sched = sample_schedule(ctx.t_h_frames, truth.n_frames - 1, alpha,
                            derive_seed(spec.seeds.front(), 500));
  } else {
    sched.t_h = ctx.t_h_frames;
  }
  auto obs = make_observations(truth, ctx.op, sched.observed_frames(), snr,
                               derive_seed(spec.seeds.front(), 100));
  Trajectory est = assimilation_rollout(ctx.params, ctx.op, truth.frame(0), obs, sched, truth);
  return {std::move(est), truth};
}

StepTiming time_per_step(const NodaParams& params, const MeasurementOperator& op,
                         std::span<const double> field, std::span<const double> y, int nx, int ny,
                         int iters) {
  using clock = std::chrono::steady_clock;
  auto median_time = [&](auto&& body) {
    for (int i = 0; i < 50; ++i) body();  // warm-up, untimed
    std::vector<double> samples(static_cast<size_t>(iters));
    for (int i = 0; i < iters; ++i) {
      const auto t0 = clock::now();
      body();
      const auto t1 = clock::now();
      samples[i] = std::chrono::duration<double>(t1 - t0).count();
    }
    std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
    return samples[samples.size() / 2];
  };

  volatile double sink = 0.0;
  StepTiming t;
  t.predict_s = median_time([&] {
    auto z = predict_step(params.predictor, field, nx, ny);
    sink = z[0];
  });
  t.predict_correct_s = median_time([&] {
    auto z = predict_step(params.predictor, field, nx, ny);
    auto c = correct_step(params, op, z, y);
    sink = c[0];
  });
  t.ratio = t.predict_correct_s / t.predict_s;
  return t;
}

namespace {

struct CheckOutcome {
  std::string name;
  double max_rel;
};

}  // namespace

double run_gradcheck(uint64_t seed, std::ostream& out) {
  Rng rng(seed);
  auto randv = [&](size_t n, double scale) {
    std::vector<double> v(n);
    std::normal_distribution<double> dist(0.0, scale);
    for (auto& x : v) x = dist(rng);
    return v;
  };
  auto rand_tensor = [&](std::vector<int> shape, double scale) {
    Tensor t = Tensor::from(shape, randv(static_cast<size_t>(Tensor::zeros(shape).numel()), scale));
    t.requires_grad = true;
    return t;
  };

  std::vector<CheckOutcome> results;
  ad::FdOptions opt;
  opt.eps = 1e-6;
  opt.seed = seed + 1;

  auto check = [&](const std::string& name, std::vector<Tensor*> params,
                   const std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>& program,
                   const ad::FdOptions& o) {
    results.push_back({name, ad::finite_difference_check(params, program, o)});
  };

  const int n = 16;
  Tensor x1 = rand_tensor({2, n}, 1.0);
  Tensor x2 = rand_tensor({2, n}, 1.0);
  const auto lam_r = randv(2 * n, 1.0);
  const auto lam_c = randv(4 * n, 1.0);

  check("add", {&x1, &x2},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.add(v[0], v[1]), t.constant(lam_r, {2, n}));
        },
        opt);
  check("sub", {&x1, &x2},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.sub(v[0], v[1]), t.constant(lam_r, {2, n}));
        },
        opt);
  check("mul", {&x1, &x2},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.mul(v[0], v[1]), t.constant(lam_r, {2, n}));
        },
        opt);

  Tensor ma = rand_tensor({4, 5}, 1.0);
  Tensor mb = rand_tensor({5, 3}, 1.0);
  const auto lam_m = randv(12, 1.0);
  check("matmul", {&ma, &mb},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.matmul(v[0], v[1]), t.constant(lam_m, {4, 3}));
        },
        opt);

  check("complex_mul", {&x1, &x2},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          ad::Var a = t.rfft(v[0], n, 1);
          ad::Var b = t.rfft(v[1], n, 1);
          return t.dot_ri(t.complex_mul(a, b), t.constant(lam_c, {2, n}, true));
        },
        opt);
  check("rfft", {&x1},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.rfft(v[0], n, 1), t.constant(lam_c, {2, n}, true));
        },
        opt);
  check("irfft", {&x1},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.irfft(t.rfft(v[0], n, 1), n, 1), t.constant(lam_r, {2, n}));
        },
        opt);

  {
    ad::FdOptions relu_opt = opt;
    Tensor* px = &x1;
    relu_opt.skip = [px, &opt](int, int64_t i) { return std::abs(px->data[i]) < 10.0 * opt.eps; };
    check("relu", {&x1},
          [&](ad::Tape& t, std::span<const ad::Var> v) {
            return t.dot_ri(t.relu(v[0]), t.constant(lam_r, {2, n}));
          },
          relu_opt);
  }
  check("tanh", {&x1},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.tanh(v[0]), t.constant(lam_r, {2, n}));
        },
        opt);

  const auto mode_idx = centered_mode_indices(4, n, 1);
  const int m_count = static_cast<int>(mode_idx.size());
  const auto lam_half = randv(2 * 2 * m_count, 1.0);
  check("mode_truncate_pad", {&x1},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          ad::Var spec = t.rfft(v[0], n, 1);
          ad::Var half = t.mode_select(spec, mode_idx);
          ad::Var full = t.mode_scatter(half, mode_idx, n, 1);
          return t.dot_ri(full, t.constant(lam_c, {2, n}, true));
        },
        opt);

  Tensor rre = rand_tensor({m_count, 2, 2}, 0.5);
  Tensor rim = rand_tensor({m_count, 2, 2}, 0.5);
  check("mode_matmul", {&x1, &rre, &rim},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          ad::Var half = t.mode_select(t.rfft(v[0], n, 1), mode_idx);
          ad::Var c = t.mode_matmul(v[1], v[2], half);
          return t.dot_ri(c, t.constant(lam_half, {2, m_count}, true));
        },
        opt);

  Tensor bias = rand_tensor({2}, 1.0);
  check("bias_rows", {&x1, &bias},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.bias_rows(v[0], v[1]), t.constant(lam_r, {2, n}));
        },
        opt);
  check("concat_rows", {&x1, &x2},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.concat_rows(v[0], v[1]), t.constant(lam_c, {4, n}));
        },
        opt);
  check("reduce_sum", {&x1},
        [&](ad::Tape& t, std::span<const ad::Var> v) { return t.reduce_sum(t.mul(v[0], v[0])); },
        opt);
  check("l2_norm", {&x1},
        [&](ad::Tape& t, std::span<const ad::Var> v) { return t.l2_norm(v[0]); }, opt);
  check("scale", {&x1},
        [&](ad::Tape& t, std::span<const ad::Var> v) {
          return t.dot_ri(t.scale(v[0], 1.7), t.constant(lam_r, {2, n}));
        },
        opt);

  // One full FNO block, spectral path plus pointwise path plus activation.
  {
    const int w = 4, grid_n = 32, kmax = 4;
    const auto blk_idx = centered_mode_indices(kmax, grid_n, 1);
    const int blk_m = static_cast<int>(blk_idx.size());
    Tensor field = rand_tensor({w, grid_n}, 1.0);
    Tensor bw = rand_tensor({w, w}, 0.3);
    Tensor bre = rand_tensor({blk_m, w, w}, 0.1);
    Tensor bim = rand_tensor({blk_m, w, w}, 0.1);
    check("fno_block", {&field, &bw, &bre, &bim},
          [&](ad::Tape& t, std::span<const ad::Var> v) {
            ad::Var spec = t.rfft(v[0], grid_n, 1);
            ad::Var half = t.mode_select(spec, blk_idx);
            ad::Var conv = t.irfft(t.mode_scatter(t.mode_matmul(v[2], v[3], half), blk_idx,
                                                  grid_n, 1),
                                   grid_n, 1);
            ad::Var lin = t.matmul(v[1], v[0]);
            return t.l2_norm(t.relu(t.add(lin, conv)));
          },
          opt);
  }

  // Three-step estimator rollout loss with a dense measurement operator.
  {
    const int grid_n = 32, steps = 3, p = 8;
    NodaParams params = init_noda(/*width=*/8, /*kmax=*/4, /*rank=*/1, /*coords=*/true, grid_n,
                                  /*e_hidden=*/16, p, /*cstar_learnable=*/false, seed + 2);
    MeasurementOperator op = MeasurementOperator::dense_random(p, grid_n, seed + 3);
    Trajectory traj;
    traj.equation = Equation::KS;
    traj.nx = grid_n;
    traj.h = 0.25;
    traj.length_x = 2.0 * kPi;
    traj.n_frames = steps + 1;
    traj.frames = randv(static_cast<size_t>(steps + 1) * grid_n, 1.0);
    std::vector<double> y_all = randv(static_cast<size_t>(steps + 1) * p, 1.0);
    auto plist = param_list(params);
    for (Tensor* t : plist) t->requires_grad = true;
    ad::FdOptions roll_opt = opt;
    roll_opt.max_coords = 300;
    check("noda_rollout_3step", plist,
          [&](ad::Tape& t, std::span<const ad::Var> v) {
            BoundNoda bound = bind_noda_from_vars(t, params, op, v);
            return build_rollout_loss(t, bound, traj, y_all, 0, steps, /*warmup_h=*/2,
                                      /*lambda=*/0.5, traj.frame(0), 0, steps, nullptr);
          },
          roll_opt);
  }

  double worst = 0.0;
  for (const auto& r : results) {
    out << (r.max_rel < 1e-5 ? "[ok]   " : "[FAIL] ") << r.name << " max_rel=" << r.max_rel
        << "\n";
    worst = std::max(worst, r.max_rel);
  }
  return worst;
}

}  // namespace noda
