// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 5 trains the toy KS model that criteria 6 and the
// trained-model checks reuse.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

#include "noda/evaluation.hpp"
#include "noda/model_io.hpp"
#include "noda/solvers.hpp"
#include "noda/training.hpp"

using namespace noda;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      problems_.push_back(what);
    } else {
      details_.push_back(what);
    }
  }

  void finish(double budget_seconds = 0.0) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (budget_seconds > 0.0 && elapsed > budget_seconds)
      problems_.push_back("runtime " + std::to_string(elapsed) + "s exceeds " +
                          std::to_string(budget_seconds) + "s");
    const bool ok = problems_.empty();
    if (!ok) ++g_failures;
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number_ << ": " << title_ << " ("
              << std::fixed << std::setprecision(1) << elapsed << "s)" << std::defaultfloat
              << "\n";
    for (const auto& d : details_) std::cout << "        " << d << "\n";
    for (const auto& p : problems_) std::cout << "        !! " << p << "\n";
  }

 private:
  int number_;
  std::string title_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> details_;
  std::vector<std::string> problems_;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------

void criterion1_spectral() {
  Criterion c(1, "spectral round-trip, Parseval, analytic derivatives at 1e-10");
  double worst_rt = 0.0, worst_parseval = 0.0, worst_sym = 0.0;
  for (int n : {8, 64, 128, 512}) {
    Grid1D g(n, 64.0 * kPi);
    Rng rng(1000 + n);
    const auto v = gaussian_vector(rng, n);
    const auto spec = dft_forward(v, g);
    const auto back = dft_inverse(spec);
    double scale = 0.0, sum_v = 0.0, sum_c = 0.0;
    for (double x : v) {
      scale = std::max(scale, std::abs(x));
      sum_v += x * x;
    }
    for (const auto& z : spec.c) sum_c += std::norm(z);
    for (int i = 0; i < n; ++i)
      worst_rt = std::max(worst_rt, std::abs(back[i] - v[i]) / scale);
    worst_parseval = std::max(worst_parseval, std::abs(sum_v - sum_c / n) / sum_v);
    for (int j = 1; j < n; ++j)
      worst_sym = std::max(worst_sym, std::abs(spec.c[j] - std::conj(spec.c[n - j])) /
                                          std::max(1.0, std::abs(spec.c[j])));
  }
  c.expect(worst_rt < 1e-12, "round-trip rel err " + num(worst_rt));
  c.expect(worst_parseval < 1e-10, "Parseval rel err " + num(worst_parseval));
  c.expect(worst_sym < 1e-12, "conjugate symmetry rel err " + num(worst_sym));

  Grid1D g(128, 2.0 * kPi);
  std::vector<double> f(128), df_expect(128), d2_expect(128);
  for (int i = 0; i < 128; ++i) {
    const double x = g.dx() * i;
    f[i] = std::sin(x);
    df_expect[i] = std::cos(x);
    d2_expect[i] = -std::sin(x);
  }
  const auto d1 = spectral_derivative(f, g, 1);
  const auto d2 = spectral_derivative(f, g, 2);
  double worst_d = 0.0;
  for (int i = 0; i < 128; ++i) {
    worst_d = std::max(worst_d, std::abs(d1[i] - df_expect[i]));
    worst_d = std::max(worst_d, std::abs(d2[i] - d2_expect[i]));
  }
  c.expect(worst_d < 1e-10, "analytic derivative abs err " + num(worst_d));
  c.finish(10.0);
}

void criterion2_solvers() {
  Criterion c(2, "solver oracles: exponential, soliton, mass, enstrophy");

  // ETDRK4 vs the exact semigroup, both symbols
  double worst_exp = 0.0;
  for (Equation eq : {Equation::KS, Equation::KdV}) {
    Grid1D g = eq == Equation::KS ? Grid1D(128, 64.0 * kPi) : Grid1D(128, 128.0);
    const double dt = 0.0625;
    Etdrk4Stepper stepper(eq, g, dt, /*linear_only=*/true);
    std::vector<double> z(g.n);
    for (int i = 0; i < g.n; ++i)
      z[i] = std::sin(2.0 * kPi * 2 * i / g.n) + 0.3 * std::cos(2.0 * kPi * 7 * i / g.n);
    auto expect = dft_forward(z, g);
    const auto k = wavenumbers(g);
    for (int j = 0; j < g.n; ++j) {
      const cplx sym = eq == Equation::KS ? cplx(k[j] * k[j] - std::pow(k[j], 4), 0.0)
                                          : cplx(0.0, std::pow(k[j], 3));
      expect.c[j] *= std::exp(sym * dt);
    }
    const auto want = dft_inverse(expect);
    stepper.step(z);
    double scale = 0.0;
    for (double v : want) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < g.n; ++i)
      worst_exp = std::max(worst_exp, std::abs(z[i] - want[i]) / std::max(1.0, scale));
  }
  c.expect(worst_exp < 1e-9, "linear-subproblem per-step err " + num(worst_exp));

  // KdV soliton over 10 recorded frames
  {
    KdVConfig cfg;
    const double kappa = 0.2, x0 = 64.0;
    auto soliton = [&](double x, double t) {
      const double speed = 4.0 * kappa * kappa;
      double arg = std::fmod(x - speed * t - x0, cfg.grid.length);
      if (arg > cfg.grid.length / 2) arg -= cfg.grid.length;
      if (arg < -cfg.grid.length / 2) arg += cfg.grid.length;
      const double s = 1.0 / std::cosh(kappa * arg);
      return 12.0 * kappa * kappa * s * s;
    };
    std::vector<double> z(cfg.grid.n);
    for (int i = 0; i < cfg.grid.n; ++i) z[i] = soliton(i * cfg.grid.dx(), 0.0);
    Etdrk4Stepper stepper(Equation::KdV, cfg.grid, cfg.h / cfg.inner_steps);
    for (int s = 0; s < 10 * cfg.inner_steps; ++s) stepper.step(z);
    double err = 0.0, den = 0.0;
    for (int i = 0; i < cfg.grid.n; ++i) {
      const double want = soliton(i * cfg.grid.dx(), 10 * cfg.h);
      err += (z[i] - want) * (z[i] - want);
      den += want * want;
    }
    const double rel = std::sqrt(err / den);
    c.expect(rel < 1e-4, "KdV soliton rel err over 10 steps " + num(rel));
  }

  // KdV mass drift over 100 frames
  {
    KdVConfig cfg;
    GrfSpec grf = default_grf(Equation::KdV, 2024);
    const auto traj = rollout(cfg, sample_initial_condition(grf, cfg.grid), 100 * cfg.h, 2024);
    auto mass = [&](std::span<const double> f) {
      double s = 0.0;
      for (double v : f) s += v;
      return s * cfg.grid.dx();
    };
    const double m0 = mass(traj.frame(0));
    double drift = 0.0;
    for (int k = 1; k <= 100; ++k) drift = std::max(drift, std::abs(mass(traj.frame(k)) - m0));
    c.expect(drift < 1e-8, "KdV mass drift " + num(drift));
  }

  // NS enstrophy decay without forcing
  {
    NSConfig cfg;
    cfg.forcing_scale = 0.0;
    GrfSpec grf = default_grf(Equation::NS, 11);
    std::vector<double> z = sample_initial_condition(grf, cfg.grid);
    NsStepper stepper(cfg, cfg.h / cfg.inner_steps);
    auto enstrophy = [&](const std::vector<double>& w) {
      double s = 0.0;
      for (double v : w) s += v * v;
      return s;
    };
    bool monotone = true;
    double prev = enstrophy(z);
    for (int s = 0; s < 10; ++s) {
      stepper.step(z);
      const double cur = enstrophy(z);
      if (cur >= prev) monotone = false;
      prev = cur;
    }
    c.expect(monotone, "zero-forcing enstrophy strictly decreasing over 10 steps");
  }
  c.finish(120.0);
}

void criterion3_gradients() {
  Criterion c(3, "finite-difference gradients: primitives, FNO block, 3-step rollout");
  std::ostringstream log;
  const double worst = run_gradcheck(20260808, log);
  c.expect(worst < 1e-5, "worst relative discrepancy " + num(worst) + " (eps=1e-6)");
  c.finish(300.0);
}

void criterion4_identities() {
  Criterion c(4, "exact structural identities");

  {  // residual identity, bitwise
    Rng rng(1);
    PredictorParams p = init_predictor(8, 6, 1, true, rng);
    p.p_w = Tensor::zeros(p.p_w.shape);
    p.p_b = Tensor::zeros(p.p_b.shape);
    for (auto& b : p.blocks) {
      b.w = Tensor::zeros(b.w.shape);
      b.conv.r_re = Tensor::zeros(b.conv.r_re.shape);
      b.conv.r_im = Tensor::zeros(b.conv.r_im.shape);
    }
    p.q_w = Tensor::zeros(p.q_w.shape);
    p.q_b = Tensor::zeros(p.q_b.shape);
    const auto field = gaussian_vector(rng, 64);
    c.expect(predict_step(p, field, 64, 1) == field, "residual identity at zero weights, bitwise");
  }

  {  // zero-innovation fixed point, bitwise (exact-identity E, so y == E(z_pred))
    const int d = 16;
    NodaParams params = init_noda(4, 3, 1, true, d, 2 * d, d, false, 2);
    params.enet.l1_w = Tensor::zeros({2 * d, d});
    params.enet.l1_b = Tensor::zeros({2 * d});
    params.enet.l2_w = Tensor::zeros({d, 2 * d});
    params.enet.l2_b = Tensor::zeros({d});
    for (int i = 0; i < d; ++i) {
      params.enet.l1_w.data[static_cast<size_t>(i) * d + i] = 1.0;
      params.enet.l1_w.data[static_cast<size_t>(d + i) * d + i] = -1.0;
      params.enet.l2_w.data[static_cast<size_t>(i) * 2 * d + i] = 1.0;
      params.enet.l2_w.data[static_cast<size_t>(i) * 2 * d + (d + i)] = -1.0;
    }
    auto op = MeasurementOperator::identity(d);
    Rng rng(3);
    const auto z_pred = gaussian_vector(rng, d);
    const auto y = estimate_measurement(params.enet, z_pred);
    c.expect(correct_step(params, op, z_pred, y) == z_pred,
             "zero-innovation fixed point, bitwise");
  }

  {  // scheduler formula
    TrainConfig cfg;
    cfg.lr = 1e-4;
    bool exact = true;
    for (int e = 0; e < 300; ++e)
      if (lr_at_epoch(cfg, e) != std::ldexp(1e-4, -(e / 50))) exact = false;
    c.expect(exact, "lr(e) == 1e-4 * 0.5^floor(e/50), exact over 300 epochs");
  }

  {  // relmse hand cases, exact
    Trajectory truth;
    truth.equation = Equation::KS;
    truth.nx = 2;
    truth.h = 1.0;
    truth.length_x = 1.0;
    truth.n_frames = 2;
    truth.frames = {1, 0, 1, 1};
    Trajectory est = truth;
    c.expect(relmse(est, truth, 0, 1) == 0.0, "relmse(truth, truth) == 0");
    Trajectory zero = truth;
    std::fill(zero.frames.begin(), zero.frames.end(), 0.0);
    c.expect(relmse(zero, truth, 0, 1) == 1.0, "relmse(0, truth) == 1");
    Trajectory third = truth;
    third.frames = {0, 0, 1, 1};
    c.expect(relmse(third, truth, 0, 1) == 1.0 / 3.0, "two-frame hand case == 1/3");
  }
  c.finish(10.0);
}

struct ToyArtifacts {
  NodaParams params;
  MeasurementOperator op;
  std::vector<Trajectory> test;
  int t_h_frames = 40;
  bool trained = false;
};

Trajectory warmup_rollout(const ToyArtifacts& toy, const Trajectory& truth, int t_h, double alpha,
                          double snr, uint64_t seed) {
  Schedule sched;
  if (alpha > 0.0) {
    sched = sample_schedule(t_h, truth.n_frames - 1, alpha, derive_seed(seed, 5));
  } else {
    sched.t_h = t_h;
  }
  auto obs = make_observations(truth, toy.op, sched.observed_frames(), snr, derive_seed(seed, 6));
  return assimilation_rollout(toy.params, toy.op, truth.frame(0), obs, sched, truth);
}

void criterion5_toy_training(ToyArtifacts& toy) {
  Criterion c(5, "toy KS training: beats persistence, alpha monotone, noise ordering");

  // KS, n=128, L=64*pi, 50 training trajectories, t_f = 30 s, seed-fixed.
  // Ground truth is solved at the shipped n=512 resolution and subsampled to
  // 128 points so the toy dataset carries the resolved attractor.
  KSConfig gen;
  std::vector<Trajectory> train_set, test_set;
  for (int i = 0; i < 70; ++i) {
    GrfSpec grf = default_grf(Equation::KS, 42 + i);
    Trajectory full = rollout(gen, sample_initial_condition(grf, gen.grid), 30.0, 42 + i);
    Trajectory t;
    t.equation = full.equation;
    t.nx = 128;
    t.ny = 1;
    t.h = full.h;
    t.length_x = full.length_x;
    t.seed = full.seed;
    t.n_frames = full.n_frames;
    t.frames.reserve(static_cast<size_t>(t.n_frames) * 128);
    for (int k = 0; k < full.n_frames; ++k)
      for (int j = 0; j < 128; ++j) t.frames.push_back(full.frame(k)[j * 4]);
    if (i < 50)
      train_set.push_back(std::move(t));
    else
      test_set.push_back(std::move(t));
  }

  TrainConfig cfg;
  cfg.width = 32;
  cfg.modes = 12;
  cfg.epochs = 50;
  cfg.batch = 5;
  cfg.lr = 2e-3;
  cfg.decay_factor = 0.5;
  cfg.decay_every = 20;
  cfg.lambda = 0.5;
  cfg.t_h_train = 10;
  cfg.bptt_window = 10;
  cfg.seg_len = 40;
  cfg.e_hidden = 128;
  cfg.snr_db = 30.0;
  cfg.seed = 20260808;
  cfg.threads = 2;

  TrainResult result = train(train_set, cfg);
  toy.params = result.params;
  toy.op = result.op;
  toy.test = test_set;
  toy.trained = true;

  c.expect(std::isfinite(result.loss_history.front()) && std::isfinite(result.loss_history.back()),
           "loss history finite");
  c.expect(result.loss_history.back() < result.loss_history.front(),
           "final epoch loss " + num(result.loss_history.back()) + " < initial " +
               num(result.loss_history.front()));

  const int t_h = toy.t_h_frames;  // 40 frames = 10 s warm-up
  const int to = test_set.front().n_frames - 1;

  // prediction (alpha = 0) vs the persistence baseline
  std::vector<double> noda_scores, persist_scores;
  for (size_t i = 0; i < test_set.size(); ++i) {
    const Trajectory& truth = test_set[i];
    const auto est = warmup_rollout(toy, truth, t_h, 0.0, 30.0, 900 + i);
    noda_scores.push_back(relmse(est, truth, t_h + 1, to));
    persist_scores.push_back(relmse(persistence_rollout(truth, t_h), truth, t_h + 1, to));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
  };
  const double noda0 = mean(noda_scores);
  const double persist = mean(persist_scores);
  c.expect(std::isfinite(noda0), "trained rollouts stay finite");
  {  // representability context: perfect prediction of the retained 12-mode
     // band with the unresolved band zeroed scores this
    Grid1D g(128, 64.0 * kPi);
    double num_e = 0.0, den_e = 0.0;
    for (const auto& truth : test_set)
      for (int k = t_h + 1; k <= to; ++k) {
        const auto s = dft_forward(truth.frame(k), g);
        for (int j = 0; j < 128; ++j) {
          const double e = std::norm(s.c[j]);
          den_e += e;
          if (std::abs(mode_index(j, 128)) > 11) num_e += e;
        }
      }
    c.expect(true, "12-mode low-pass oracle RelMSE " + num(num_e / den_e) +
                       " (KS energy peaks near mode 21 at L=64*pi)");
  }
  c.expect(noda0 < 0.7 * persist, "alpha=0 RelMSE " + num(noda0) + " vs persistence " +
                                      num(persist) + " (need >= 30% better)");

  // one-step MSE vs persistence on held-out frames
  {
    double model_mse = 0.0, persist_mse = 0.0;
    int count = 0;
    for (const auto& truth : test_set) {
      for (int k = 40; k < 60; ++k) {
        const auto pred = predict_step(toy.params.predictor, truth.frame(k), 128, 1);
        for (int i = 0; i < 128; ++i) {
          const double dm = pred[i] - truth.frame(k + 1)[i];
          const double dp = truth.frame(k)[i] - truth.frame(k + 1)[i];
          model_mse += dm * dm;
          persist_mse += dp * dp;
        }
        ++count;
      }
    }
    model_mse /= count;
    persist_mse /= count;
    c.expect(model_mse < 0.8 * persist_mse, "one-step MSE " + num(model_mse) +
                                                " vs persistence " + num(persist_mse) +
                                                " (need >= 20% better)");
  }

  // alpha sweep at 30 dB: non-increasing, with >= 25% total reduction
  {
    std::vector<double> by_alpha;
    for (double alpha : {0.0, 0.1, 0.2, 0.3}) {
      std::vector<double> scores;
      for (size_t i = 0; i < toy.test.size(); ++i)
        scores.push_back(relmse(warmup_rollout(toy, toy.test[i], t_h, alpha, 30.0, 900 + i),
                                toy.test[i], t_h + 1, to));
      by_alpha.push_back(mean(scores));
    }
    std::ostringstream sweep;
    for (double v : by_alpha) sweep << num(v) << " ";
    bool monotone = true;
    for (size_t i = 1; i < by_alpha.size(); ++i)
      if (by_alpha[i] > by_alpha[i - 1]) monotone = false;
    c.expect(monotone, "RelMSE non-increasing over alpha {0,0.1,0.2,0.3}: " + sweep.str());
    c.expect(by_alpha[3] < 0.75 * by_alpha[0],
             "alpha=0.3 reduces RelMSE by >= 25% vs alpha=0: " + num(by_alpha[3]) + " vs " +
                 num(by_alpha[0]));
  }

  // noisier warm-up observations score at least as badly (Table-1 ordering);
  // averaged over three observation-noise draws per trajectory
  {
    std::vector<double> s20, s30;
    for (uint64_t seed_base : {900ULL, 1900ULL, 2900ULL}) {
      for (size_t i = 0; i < toy.test.size(); ++i) {
        s20.push_back(relmse(warmup_rollout(toy, toy.test[i], t_h, 0.0, 20.0, seed_base + i),
                             toy.test[i], t_h + 1, to));
        s30.push_back(relmse(warmup_rollout(toy, toy.test[i], t_h, 0.0, 30.0, seed_base + i),
                             toy.test[i], t_h + 1, to));
      }
    }
    c.expect(mean(s20) >= mean(s30), "20 dB RelMSE " + num(mean(s20)) + " >= 30 dB RelMSE " +
                                         num(mean(s30)));
  }

  // corrected frames move toward the truth at 30 dB on >= 80% of corrections
  {
    int improved = 0, total = 0;
    for (size_t i = 0; i < toy.test.size(); ++i) {
      const Trajectory& truth = toy.test[i];
      Schedule sched = sample_schedule(t_h, to, 0.3, derive_seed(900 + i, 5));
      auto obs = make_observations(truth, toy.op, sched.observed_frames(), 30.0,
                                   derive_seed(900 + i, 6));
      std::vector<double> z(truth.frame(0).begin(), truth.frame(0).end());
      for (int k = 1; k <= to; ++k) {
        auto z_pred = predict_step(toy.params.predictor, z, 128, 1);
        if (sched.corrects_at(k)) {
          auto y = obs.for_frame(k);
          auto corrected = correct_step(toy.params, toy.op, z_pred, *y);
          if (k > t_h) {
            double err_pred = 0.0, err_corr = 0.0;
            for (int j = 0; j < 128; ++j) {
              err_pred += (z_pred[j] - truth.frame(k)[j]) * (z_pred[j] - truth.frame(k)[j]);
              err_corr += (corrected[j] - truth.frame(k)[j]) * (corrected[j] - truth.frame(k)[j]);
            }
            ++total;
            if (err_corr < err_pred) ++improved;
          }
          z = std::move(corrected);
        } else {
          z = std::move(z_pred);
        }
      }
    }
    c.expect(improved >= 0.8 * total, "correction improves the estimate on " +
                                          std::to_string(improved) + "/" + std::to_string(total) +
                                          " corrected frames (need >= 80%)");
  }

  c.finish(2700.0);
}

void criterion6_warmup(const ToyArtifacts& toy) {
  Criterion c(6, "warm-up trend: t_H = 40 frames beats t_H = 1");
  if (!toy.trained) {
    c.expect(false, "toy model unavailable (criterion 5 failed before training)");
    c.finish();
    return;
  }
  // both warm-up lengths scored over the common window (40, t_f] so the
  // comparison isolates the state quality at the end of the longer warm-up
  const int to = toy.test.front().n_frames - 1;
  double long_warm = 0.0, short_warm = 0.0;
  int count = 0;
  for (uint64_t seed_base : {900ULL, 1900ULL, 2900ULL}) {
    for (size_t i = 0; i < toy.test.size(); ++i) {
      const Trajectory& truth = toy.test[i];
      long_warm += relmse(warmup_rollout(toy, truth, 40, 0.0, 30.0, seed_base + i), truth, 41, to);
      short_warm += relmse(warmup_rollout(toy, truth, 1, 0.0, 30.0, seed_base + i), truth, 41, to);
      ++count;
    }
  }
  long_warm /= count;
  short_warm /= count;
  c.expect(long_warm < short_warm, "RelMSE at t_H=40 (" + num(long_warm) + ") < t_H=1 (" +
                                       num(short_warm) + ") over the common window");
  c.finish();
}

void criterion7_overhead(const ToyArtifacts& toy) {
  Criterion c(7, "correction overhead within 1.0x-3.0x of prediction alone");
  NodaParams params =
      toy.trained ? toy.params : init_noda(32, 12, 1, true, 128, 128, 128, false, 5);
  auto op = MeasurementOperator::identity(128);
  Rng rng(6);
  const auto field = gaussian_vector(rng, 128);
  const auto y = op.apply(field);
  const StepTiming t = time_per_step(params, op, field, y, 128, 1, 1000);
  c.expect(t.ratio >= 1.0 && t.ratio <= 3.0,
           "predict " + num(t.predict_s * 1e3) + " ms, predict+correct " +
               num(t.predict_correct_s * 1e3) + " ms, ratio " + num(t.ratio));
  c.finish(120.0);
}

void criterion8_formats() {
  Criterion c(8, "bit-exact format round trips and fixture checksum");
  const auto tmp = fs::temp_directory_path();

  {  // trajectory round trip
    KSConfig cfg;
    cfg.grid = Grid1D(64, 64.0 * kPi);
    GrfSpec grf = default_grf(Equation::KS, 77);
    const Trajectory t = rollout(cfg, sample_initial_condition(grf, cfg.grid), 2.0, 77);
    const auto path = tmp / "noda_accept_traj.noda";
    write_trajectory(path, t);
    const Trajectory r = read_trajectory(path);
    c.expect(r.frames == t.frames && r.h == t.h && r.seed == t.seed,
             "trajectory write->read bit-exact");
    fs::remove(path);
  }

  {  // model round trip
    NodaParams params = init_noda(8, 5, 1, true, 64, 32, 64, false, 13);
    const auto path = tmp / "noda_accept_model.nodm";
    save_model(path, params);
    NodaParams loaded = load_model(path);
    auto a = param_list(params);
    auto b = param_list(loaded);
    bool same = a.size() == b.size();
    for (size_t i = 0; same && i < a.size(); ++i)
      same = a[i]->shape == b[i]->shape && a[i]->data == b[i]->data;
    c.expect(same, "model write->read bit-exact");
    fs::remove(path);
  }

  {  // committed fixture with frozen checksum
    const fs::path fixture = fs::path(NODA_FIXTURE_DIR) / "ks_fixture.noda";
    std::ifstream f(fixture, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    c.expect(!bytes.empty(), "fixture present: " + fixture.string());
    const uint64_t sum = fnv1a64(bytes);
    c.expect(sum == 0x48f625c03ffdef83ULL,
             "fixture FNV-1a64 checksum matches frozen value (got " + std::to_string(sum) + ")");
    const Trajectory t = read_trajectory(fixture);
    c.expect(t.nx == 64 && t.n_frames == 9 && t.equation == Equation::KS,
             "fixture decodes to the recorded 9x64 KS trajectory");
    const auto path = tmp / "noda_accept_fixture.noda";
    write_trajectory(path, t);
    std::ifstream f2(path, std::ios::binary);
    std::string bytes2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    c.expect(bytes2 == bytes, "fixture re-encodes to identical bytes");
    fs::remove(path);
  }
  c.finish(60.0);
}

}  // namespace

int main() {
  std::cout << "NODA acceptance suite\n";
  criterion1_spectral();
  criterion2_solvers();
  criterion3_gradients();
  criterion4_identities();
  ToyArtifacts toy;
  try {
    criterion5_toy_training(toy);
  } catch (const std::exception& e) {
    ++g_failures;
    std::cout << "[FAIL] criterion 5: exception: " << e.what() << "\n";
  }
  criterion6_warmup(toy);
  criterion7_overhead(toy);
  criterion8_formats();
  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED\n"
                                : std::to_string(g_failures) + " criteria failed\n");
  return g_failures == 0 ? 0 : 1;
}
