#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "noda/assimilation.hpp"
#include "noda/training.hpp"

namespace noda {

/// sum_{k=from}^{to} ||z_D(k) - zhat(k)||^2 / sum ||z_D(k)||^2, frames inclusive.
double relmse(const Trajectory& estimate, const Trajectory& truth, int from_frame, int to_frame);
/// Same, skipping the listed frames (used by --exclude-observed scoring).
double relmse_excluding(const Trajectory& estimate, const Trajectory& truth, int from_frame,
                        int to_frame, const std::vector<int>& excluded);

struct MetricRow {
  std::string method;
  std::string equation;
  double t_f = 0.0;
  double snr_db = 0.0;
  double alpha = 0.0;
  double t_h = 0.0;
  double relmse_mean = 0.0;
  double relmse_std = 0.0;
  double time_per_step = 0.0;  // seconds; 0 when not measured
};

void emit_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path);
/// |zhat - z_D| per frame, written in the trajectory container.
void emit_heatmap_data(const Trajectory& estimate, const Trajectory& truth,
                       const std::filesystem::path& path);

struct ExperimentSpec {
  Equation equation = Equation::KS;
  std::filesystem::path model;
  std::filesystem::path data_dir;  // test trajectories (*.noda)
  std::vector<double> t_f_list;
  std::vector<double> snr_list;
  std::vector<double> alpha_list;
  double t_h_seconds = 0.0;
  std::vector<double> t_h_sweep;  // warm-up sweep, seconds
  std::vector<uint64_t> seeds;
  std::string c_kind = "identity";
  bool exclude_observed = false;
  std::vector<std::string> protocols;  // subset of prediction|assimilation|warmup
};

ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

std::vector<MetricRow> experiment_prediction(const ExperimentSpec& spec);
std::vector<MetricRow> experiment_assimilation(const ExperimentSpec& spec);
std::vector<MetricRow> experiment_warmup(const ExperimentSpec& spec);

/// Baselines used by the harness: hold the warm-start frame, or roll the
/// predictor with the corrector disabled from the warm-start frame.
Trajectory persistence_rollout(const Trajectory& truth, int start_frame);
Trajectory prediction_only_rollout(const NodaParams& params, const Trajectory& truth,
                                   int start_frame);

struct StepTiming {
  double predict_s = 0.0;
  double predict_correct_s = 0.0;
  double ratio = 0.0;
};

/// Median wall time over >= `iters` invocations, after untimed warm-up calls.
StepTiming time_per_step(const NodaParams& params, const MeasurementOperator& op,
                         std::span<const double> field, std::span<const double> y, int nx, int ny,
                         int iters = 1000);

/// One estimator rollout of the spec's first test trajectory, for error-heatmap
/// output; returns (estimate, ground truth).
std::pair<Trajectory, Trajectory> sample_rollout(const ExperimentSpec& spec, double alpha,
                                                 double snr);

/// Finite-difference verification of every primitive, one FNO block, and a
/// 3-step estimator rollout loss. Prints one line per check; returns the
/// worst relative discrepancy.
double run_gradcheck(uint64_t seed, std::ostream& out);

}  // namespace noda
