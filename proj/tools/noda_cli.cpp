// Command-line surface for trajectory generation, training, assimilation
// rollouts, scoring, the experiment protocols, gradient checking, and timing.
//
// Exit codes: 0 success, 2 usage error, 3 data-format error, 4 numerical
// failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "noda/evaluation.hpp"
#include "noda/model_io.hpp"
#include "noda/solvers.hpp"
#include "noda/training.hpp"

namespace fs = std::filesystem;
using namespace noda;

namespace {

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  return std::stod(s);
}

std::pair<int, int> parse_resolution(const std::string& s, Equation eq) {
  if (s.empty()) {
    switch (eq) {
      case Equation::KS: return {512, 1};
      case Equation::KdV: return {128, 1};
      case Equation::NS: return {64, 64};
    }
  }
  const auto comma = s.find(',');
  if (comma == std::string::npos) {
    const int n = std::stoi(s);
    return eq == Equation::NS ? std::pair{n, n} : std::pair{n, 1};
  }
  return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

double default_dt(Equation eq) {
  switch (eq) {
    case Equation::KS: return 0.25;
    case Equation::KdV: return 0.5;
    case Equation::NS: return 1.0;
  }
  return 0.25;
}

int run_generate(const std::string& equation, int n_traj, double tf, double dt,
                 const std::string& resolution, double re, uint64_t seed, const std::string& out) {
  const Equation eq = equation_from_name(equation);
  const auto [nx, ny] = parse_resolution(resolution, eq);
  const double h = dt > 0 ? dt : default_dt(eq);
  fs::create_directories(out);
  for (int i = 0; i < n_traj; ++i) {
    Trajectory traj = generate_trajectory(eq, nx, ny, h, tf, re, seed + i);
    std::ostringstream name;
    name << "traj_" << std::setw(4) << std::setfill('0') << i << ".noda";
    write_trajectory(fs::path(out) / name.str(), traj);
  }
  std::cout << "wrote " << n_traj << " " << equation << " trajectories to " << out << "\n";
  return 0;
}

int run_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out) {
  TrainConfig cfg = load_train_config(config_path);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(data_dir))
    if (e.path().extension() == ".noda") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError("no .noda trajectories in " + data_dir);
  std::vector<Trajectory> data;
  data.reserve(files.size());
  for (const auto& f : files) data.push_back(read_trajectory(f));

  TrainResult result = train(data, cfg);
  save_model(out, result.params);
  save_optimizer_state(out + ".opt", result.adam);

  std::ofstream loss_csv(out + ".loss.csv");
  loss_csv << "epoch,loss\n";
  for (size_t e = 0; e < result.loss_history.size(); ++e)
    loss_csv << e << "," << std::setprecision(12) << result.loss_history[e] << "\n";
  for (size_t e = 0; e < result.loss_history.size(); ++e)
    std::cout << "epoch " << e << " loss " << result.loss_history[e] << "\n";
  std::cout << "model written to " << out << "\n";
  return 0;
}

int run_rollout(const std::string& model_path, const std::string& traj_path, double alpha,
                const std::string& snr, double th, const std::string& c_kind, uint64_t seed,
                const std::string& out) {
  NodaParams params = load_model(model_path);
  Trajectory truth = read_trajectory(traj_path);
  const int d = truth.frame_size();
  MeasurementOperator op = c_kind == "random"
                               ? MeasurementOperator::dense_random(params.enet.p, d,
                                                                   derive_seed(seed, 11))
                               : MeasurementOperator::identity(d);
  if (op.p != params.enet.p || op.d != params.enet.d)
    throw std::invalid_argument("rollout: model expects p=" + std::to_string(params.enet.p) +
                                ", d=" + std::to_string(params.enet.d));
  const double snr_db = parse_snr(snr);
  const double ratio = th / truth.h;
  const int t_h = static_cast<int>(std::llround(ratio));
  if (std::abs(ratio - t_h) > 1e-9 || t_h < 0 || t_h >= truth.n_frames)
    throw std::invalid_argument("rollout: --th must be a frame-aligned time inside the trajectory");
  Schedule sched = sample_schedule(t_h, truth.n_frames - 1, alpha, derive_seed(seed, 21));
  ObservationSet obs = make_observations(truth, op, sched.observed_frames(), snr_db,
                                         derive_seed(seed, 31));
  Trajectory est = assimilation_rollout(params, op, truth.frame(0), obs, sched, truth);
  write_trajectory(out, est);
  std::cout << "estimated trajectory written to " << out << "\n";
  return 0;
}

int run_eval(const std::string& est_path, const std::string& gt_path, double th,
             const std::string& csv) {
  Trajectory est = read_trajectory(est_path);
  Trajectory truth = read_trajectory(gt_path);
  const double ratio = th / truth.h;
  const int t_h = static_cast<int>(std::llround(ratio));
  if (std::abs(ratio - t_h) > 1e-9)
    throw std::invalid_argument("eval: --th must be a multiple of the frame step");
  const double score = relmse(est, truth, t_h + 1, truth.n_frames - 1);
  MetricRow row;
  row.method = fs::path(est_path).stem().string();
  row.equation = equation_name(truth.equation);
  row.t_f = truth.t_f();
  row.snr_db = std::numeric_limits<double>::infinity();
  row.t_h = th;
  row.relmse_mean = score;
  emit_csv({row}, csv);
  std::cout << "relmse " << score << " (csv: " << csv << ")\n";
  return 0;
}

int run_experiment(const std::string& spec_path, const std::string& out_dir,
                   bool exclude_observed) {
  ExperimentSpec spec = load_experiment_spec(spec_path);
  if (exclude_observed) spec.exclude_observed = true;
  fs::create_directories(out_dir);
  auto has = [&](const char* p) {
    return std::find(spec.protocols.begin(), spec.protocols.end(), p) != spec.protocols.end();
  };
  std::vector<MetricRow> all;
  if (has("prediction")) {
    auto rows = experiment_prediction(spec);
    emit_csv(rows, fs::path(out_dir) / "prediction.csv");
    all.insert(all.end(), rows.begin(), rows.end());
  }
  if (has("assimilation")) {
    auto rows = experiment_assimilation(spec);
    emit_csv(rows, fs::path(out_dir) / "assimilation.csv");
    all.insert(all.end(), rows.begin(), rows.end());
  }
  if (has("warmup")) {
    auto rows = experiment_warmup(spec);
    emit_csv(rows, fs::path(out_dir) / "warmup.csv");
    all.insert(all.end(), rows.begin(), rows.end());
  }
  emit_csv(all, fs::path(out_dir) / "results.csv");

  // per-frame |error| fields for figure-style plots, at the extreme alphas
  const double snr = spec.snr_list.front();
  auto [est0, truth] = sample_rollout(spec, spec.alpha_list.front(), snr);
  emit_heatmap_data(est0, truth, fs::path(out_dir) / "heatmap_alpha_lo.noda");
  if (spec.alpha_list.size() > 1) {
    auto [est1, truth1] = sample_rollout(spec, spec.alpha_list.back(), snr);
    emit_heatmap_data(est1, truth1, fs::path(out_dir) / "heatmap_alpha_hi.noda");
  }
  std::cout << "wrote " << all.size() << " metric rows to " << out_dir << "\n";
  return 0;
}

int run_gradcheck_cmd(uint64_t seed) {
  const double worst = run_gradcheck(seed, std::cout);
  std::cout << "worst max_rel = " << worst << "\n";
  if (worst >= 1e-5) throw NumericError("gradcheck failed: worst relative error " +
                                        std::to_string(worst));
  return 0;
}

int run_bench(const std::string& model_path, const std::string& traj_path) {
  NodaParams params = load_model(model_path);
  Trajectory truth = read_trajectory(traj_path);
  if (params.enet.d != truth.frame_size())
    throw std::invalid_argument("bench: model d does not match trajectory");
  MeasurementOperator op = MeasurementOperator::identity(truth.frame_size());
  if (op.p != params.enet.p)
    throw std::invalid_argument("bench: identity operator does not match model p");
  auto y = op.apply(truth.frame(0));
  StepTiming t = time_per_step(params, op, truth.frame(0), y, truth.nx, truth.ny);
  std::cout << "predict:         " << t.predict_s * 1e3 << " ms/step\n"
            << "predict+correct: " << t.predict_correct_s * 1e3 << " ms/step\n"
            << "overhead ratio:  " << t.ratio << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NODA: recursive neural-operator prediction and data assimilation"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate ground-truth trajectories");
  std::string g_eq;
  int g_n = 1;
  double g_tf = 60.0, g_dt = -1.0, g_re = 40.0;
  std::string g_res, g_out;
  uint64_t g_seed = 0;
  gen->add_option("--equation", g_eq, "ks|kdv|ns")->required();
  gen->add_option("--n-traj", g_n, "trajectory count")->required();
  gen->add_option("--tf", g_tf, "final time, seconds")->required();
  gen->add_option("--dt", g_dt, "recorded timestep (default per equation)");
  gen->add_option("--resolution", g_res, "N or NX,NY (default per equation)");
  gen->add_option("--re", g_re, "Reynolds number (ns only)");
  gen->add_option("--seed", g_seed, "base seed; trajectory i uses seed+i");
  gen->add_option("--out", g_out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "Train a NODA model");
  std::string t_data, t_cfg, t_out;
  tr->add_option("--data", t_data, "directory of training .noda files")->required();
  tr->add_option("--config", t_cfg, "TrainConfig file (JSON or key=value)")->required();
  tr->add_option("--out", t_out, "output model path")->required();

  auto* ro = app.add_subcommand("rollout", "Run the estimator over one trajectory");
  std::string r_model, r_traj, r_snr = "inf", r_c = "identity", r_out;
  double r_alpha = 0.0, r_th = 0.0;
  uint64_t r_seed = 0;
  ro->add_option("--model", r_model)->required();
  ro->add_option("--traj", r_traj, "ground-truth trajectory file")->required();
  ro->add_option("--alpha", r_alpha, "assimilation ratio in [0,1]");
  ro->add_option("--snr", r_snr, "observation SNR in dB, or inf");
  ro->add_option("--th", r_th, "warm-up horizon, seconds")->required();
  ro->add_option("--c", r_c, "identity|random measurement operator");
  ro->add_option("--seed", r_seed);
  ro->add_option("--out", r_out, "estimated trajectory output")->required();

  auto* ev = app.add_subcommand("eval", "Score an estimate against ground truth");
  std::string e_est, e_gt, e_csv;
  double e_th = 0.0;
  ev->add_option("--est", e_est)->required();
  ev->add_option("--gt", e_gt)->required();
  ev->add_option("--th", e_th, "warm-up horizon, seconds")->required();
  ev->add_option("--csv", e_csv, "output CSV")->required();

  auto* ex = app.add_subcommand("experiment", "Run the experiment protocols from a spec file");
  std::string x_spec, x_out;
  bool x_exclude = false;
  ex->add_option("--spec", x_spec)->required();
  ex->add_option("--out", x_out)->required();
  ex->add_flag("--exclude-observed", x_exclude, "score only frames never supplied for correction");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  uint64_t gc_seed = 7;
  gc->add_option("--seed", gc_seed);

  auto* be = app.add_subcommand("bench", "Per-step prediction/correction timing");
  std::string b_model, b_traj;
  be->add_option("--model", b_model)->required();
  be->add_option("--traj", b_traj)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return run_generate(g_eq, g_n, g_tf, g_dt, g_res, g_re, g_seed, g_out);
    if (tr->parsed()) return run_train(t_data, t_cfg, t_out);
    if (ro->parsed())
      return run_rollout(r_model, r_traj, r_alpha, r_snr, r_th, r_c, r_seed, r_out);
    if (ev->parsed()) return run_eval(e_est, e_gt, e_th, e_csv);
    if (ex->parsed()) return run_experiment(x_spec, x_out, x_exclude);
    if (gc->parsed()) return run_gradcheck_cmd(gc_seed);
    if (be->parsed()) return run_bench(b_model, b_traj);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "data-format error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "data-format error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
