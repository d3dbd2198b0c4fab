#pragma once

#include <span>
#include <vector>

#include "noda/autodiff.hpp"
#include "noda/dataset.hpp"
#include "noda/fno.hpp"
#include "noda/params.hpp"

namespace noda {

/// y_hat = E(z): affine -> relu -> affine on the flattened field.
std::vector<double> estimate_measurement(const MeasurementNetParams& enet,
                                         std::span<const double> z);

/// Gated correction K(z_pred)[u] = tanh(W_z E(z_pred) + W_y y + b) o (C* u).
/// e_pred must be E(z_pred); the fixed-C* path lifts u through op's transpose.
std::vector<double> gain_apply(const GainParams& gain, const MeasurementOperator& op,
                               std::span<const double> e_pred, std::span<const double> y,
                               std::span<const double> u);

/// z = z_pred + K(z_pred)[y - E(z_pred)].
std::vector<double> correct_step(const NodaParams& params, const MeasurementOperator& op,
                                 std::span<const double> z_pred, std::span<const double> y);

/// The recursive estimator's cursor: current estimate, clock, schedule.
struct RolloutState {
  std::vector<double> estimate;
  int frame = 0;
  const Schedule* schedule = nullptr;
};

/// Alternates prediction with correction wherever the schedule has a
/// measurement: initialize with z0 (= z_D(t_0)), then for every k predict and,
/// if k is a warm-up or assimilation instant, correct against y(t_k).
Trajectory assimilation_rollout(const NodaParams& params, const MeasurementOperator& op,
                                std::span<const double> z0, const ObservationSet& obs,
                                const Schedule& schedule, const Trajectory& reference);

// Tape-side mirrors.
struct CorrectorVars {
  ad::Var l1_w, l1_b, l2_w, l2_b;
  ad::Var w_z, w_y, b;
  ad::Var cstar;        // learnable C*, when enabled
  ad::Var cstar_fixed;  // constant C^T matrix for the dense fixed path
  const NodaParams* meta = nullptr;
  const MeasurementOperator* op = nullptr;
};

CorrectorVars bind_corrector(ad::Tape& tape, NodaParams& params, const MeasurementOperator& op);
ad::Var estimate_measurement_tape(ad::Tape& tape, const CorrectorVars& vars, ad::Var z);
ad::Var correct_step_tape(ad::Tape& tape, const CorrectorVars& vars, ad::Var z_pred,
                          ad::Var y_obs);

}  // namespace noda
