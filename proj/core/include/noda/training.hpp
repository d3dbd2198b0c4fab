#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "noda/assimilation.hpp"
#include "noda/dataset.hpp"
#include "noda/params.hpp"

namespace noda {

struct TrainConfig {
  double lr = 1e-4;
  double decay_factor = 0.5;
  int decay_every = 50;
  int epochs = 300;
  int batch = 32;
  double lambda = 0.5;
  int t_h_train = -1;  // frames; -1 picks the per-equation reference default
  int bptt_window = 10;
  uint64_t seed = 0;
  // model / measurement knobs
  int width = 64;
  int modes = 20;
  int e_hidden = 256;
  double snr_db = std::numeric_limits<double>::infinity();
  std::string c_kind = "identity";
  int p = 0;  // 0 -> d
  bool coord_channels = true;
  bool cstar_learnable = false;
  int seg_len = 0;  // frames per training segment; 0 -> full trajectory
  int threads = 1;
};

/// Reads JSON ({"lr": 1e-4, ...}) or key=value lines; keys are the
/// TrainConfig field names.
TrainConfig load_train_config(const std::filesystem::path& path);

int default_t_h_train(Equation eq);  // NS 300, KS 500, KdV 80

/// lr * decay_factor^floor(epoch / decay_every), exact.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// Two-term objective: mean un-squared L2 reconstruction error over all
/// frames plus lambda-weighted measurement mismatch over the t_h observed
/// frames.
double loss_J(const NodaParams& params, const Trajectory& estimate,
              const ObservationSet& measurements, const Trajectory& truth, double lambda,
              int t_h);

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

AdamState make_adam_state(std::span<Tensor* const> params);
void adam_step(std::span<Tensor* const> params, std::span<const std::vector<double>> grads,
               AdamState& state, double lr);

void save_optimizer_state(const std::filesystem::path& path, const AdamState& state);
AdamState load_optimizer_state(const std::filesystem::path& path);

/// All leaf bindings of a NodaParams set on one tape, in param_list order.
struct BoundNoda {
  PredictorVars pred;
  CorrectorVars corr;
  std::vector<ad::Var> leafs;
};

BoundNoda bind_noda(ad::Tape& tape, NodaParams& params, const MeasurementOperator& op);
BoundNoda bind_noda_from_vars(ad::Tape& tape, NodaParams& params, const MeasurementOperator& op,
                              std::span<const ad::Var> vars);

/// Builds the taped estimator rollout for relative steps (from_step, to_step]
/// of a segment starting at `start`, beginning from carried state z_init.
/// Returns the partial loss (normalized by the full segment's N and H so the
/// window losses sum to J) and writes the final estimate Var.
ad::Var build_rollout_loss(ad::Tape& tape, const BoundNoda& bound, const Trajectory& traj,
                           const std::vector<double>& y_all, int start, int n_steps,
                           int warmup_h, double lambda, std::span<const double> z_init,
                           int from_step, int to_step, ad::Var* z_final);

/// Truncated-BPTT loss/gradient of one segment; grad_acc (param_list order)
/// is accumulated into when non-null.
double segment_loss_grad(NodaParams& params, const MeasurementOperator& op,
                         const Trajectory& traj, const std::vector<double>& y_all, int start,
                         int n_steps, int warmup_h, double lambda, int bptt_window,
                         std::vector<std::vector<double>>* grad_acc);

struct TrainResult {
  NodaParams params;
  MeasurementOperator op;
  AdamState adam;                    // final optimizer state, for checkpointing
  std::vector<double> loss_history;  // per-epoch mean segment loss
};

TrainResult train(const std::vector<Trajectory>& data, const TrainConfig& cfg);

}  // namespace noda
