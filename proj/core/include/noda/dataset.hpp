#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noda/trajectory.hpp"

namespace noda {

/// y = C z: identity keeps the flattened frame; dense_random is a seeded p x d
/// matrix with entries uniform in [0, 1].
struct MeasurementOperator {
  enum class Kind : uint8_t { Identity = 0, DenseRandom = 1 };

  Kind kind = Kind::Identity;
  int p = 0;
  int d = 0;
  uint64_t seed = 0;
  std::vector<double> matrix;  // p x d row-major; empty for identity

  static MeasurementOperator identity(int d);
  static MeasurementOperator dense_random(int p, int d, uint64_t seed);

  std::vector<double> apply(std::span<const double> frame) const;
  /// C^T u, the adjoint lift used by the fixed gain path.
  std::vector<double> apply_transpose(std::span<const double> u) const;
};

/// Sparse noisy measurements y(t_k) with their frame indices.
struct ObservationSet {
  std::vector<int> times;  // strictly increasing frame indices
  std::vector<double> y;   // times.size() x p, row-major
  int p = 0;
  double snr_db = std::numeric_limits<double>::infinity();
  MeasurementOperator op;
  Equation equation = Equation::KS;
  double h = 0.0;
  uint64_t noise_seed = 0;

  std::span<const double> at_index(size_t i) const {
    return {y.data() + i * p, static_cast<size_t>(p)};
  }
  /// Row for frame k, or nullopt if that frame was not observed.
  std::optional<std::span<const double>> for_frame(int k) const;
};

/// Warm-up window plus the random assimilation instants drawn from the
/// prediction horizon.
struct Schedule {
  int t_h = 0;                   // frames 1..t_h are all observed
  std::vector<int> assim_times;  // sorted, subset of (t_h, t_f]
  double alpha = 0.0;

  bool corrects_at(int k) const;
  std::vector<int> observed_frames() const;  // warm-up plus assimilation, sorted
};

std::vector<double> apply_measurement(const MeasurementOperator& op,
                                      std::span<const double> frame);

/// Adds white Gaussian noise sized against the mean power of the whole
/// observation set: sigma^2 = power / 10^(snr_db/10). +inf leaves y unchanged.
std::vector<double> add_noise_snr(std::span<const double> y_clean, double snr_db, uint64_t seed);

Schedule sample_schedule(int t_h, int t_f_frames, double alpha, uint64_t seed);

ObservationSet make_observations(const Trajectory& traj, const MeasurementOperator& op,
                                 std::vector<int> times, double snr_db, uint64_t noise_seed);

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& path);
void write_observations(const std::filesystem::path& path, const ObservationSet& obs);
ObservationSet read_observations(const std::filesystem::path& path);

/// Deterministic split by index order: first n_train for training.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& all, size_t n_train) {
  if (n_train > all.size())
    throw std::invalid_argument("split: n_train " + std::to_string(n_train) + " exceeds " +
                                std::to_string(all.size()));
  std::vector<T> train(all.begin(), all.begin() + n_train);
  std::vector<T> test(all.begin() + n_train, all.end());
  return {std::move(train), std::move(test)};
}

}  // namespace noda
