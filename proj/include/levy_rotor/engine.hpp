#pragma once

// Two evolution engines for the measured rotor:
//  * trajectory Monte Carlo (closed-form kernel draws or full wave-function evolution plus collapse),
//  * deterministic master-equation propagation of the momentum distribution,
// together with the exact schedule variance and the synthetic T^beta kernel.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "levy_rotor/bessel.hpp"
#include "levy_rotor/levy.hpp"
#include "levy_rotor/unitary.hpp"

namespace levy_rotor {

enum class EngineKind { closed_form_kernel, full_wavefunction };

std::string_view to_string(EngineKind e);
EngineKind parse_engine(std::string_view s);

struct KernelModel {
  enum class Kind { bessel, synthetic_beta };
  Kind kind = Kind::bessel;
  double beta = 2.0;  // only meaningful for synthetic_beta

  static KernelModel bessel() { return {}; }
  static KernelModel synthetic(double beta) { return {Kind::synthetic_beta, beta}; }
  bool is_synthetic() const { return kind == Kind::synthetic_beta; }
};

// What a trajectory reports at a sample time lying strictly inside an interval.
enum class SampleSemantics {
  held_after_collapse,  // momentum of the last collapse at or before the sample time
  virtual_measurement,  // full engine only: a non-collapsing draw from the evolving |a_l|^2
};

std::string_view to_string(SampleSemantics s);
SampleSemantics parse_sample_semantics(std::string_view s);

/// 20 points per decade by default, rounded to integers, deduplicated, ending at horizon.
std::vector<std::int64_t> log_spaced_times(std::int64_t horizon, int points_per_decade = 20);

struct EnsembleConfig {
  std::int64_t n_trajectories = 1000;
  std::int64_t horizon = 10000;
  std::vector<std::int64_t> sample_times;  // increasing, inside [1, horizon]
  std::uint64_t master_seed = 1;
  ResonanceParams resonance = ResonanceParams::principal(1.0);
  LevyParams levy;
  EngineKind engine = EngineKind::closed_form_kernel;
  KernelModel kernel_model;
  SampleSemantics semantics = SampleSemantics::held_after_collapse;
  // When set, every trajectory uses these intervals instead of Levy draws.
  std::optional<std::vector<std::int64_t>> fixed_schedule;
  std::int64_t initial_momentum = 0;  // every trajectory starts in |initial_momentum>
  int threads = 1;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// Symmetric three-point lattice law: p/2 at +-k, 1-p at 0 with k = ceil(T^{beta/2}),
/// p = min(1, T^beta / k^2). Variance T^beta unless clamped.
struct ThreePointKernel {
  std::int64_t k = 0;
  double p = 0.0;

  double variance() const { return p * static_cast<double>(k) * static_cast<double>(k); }
};

ThreePointKernel synthetic_three_point(double beta, std::int64_t T);
TransitionKernel synthetic_kernel(double beta, std::int64_t T);

/// Draws momentum increments for one inter-measurement interval by inverse CDF (ascending l).
/// Bessel CDFs for T up to a cache bound are precomputed; the object is immutable and shareable.
class IncrementSampler {
 public:
  IncrementSampler(KernelModel model, double kappa, std::int64_t max_interval,
                   std::size_t cache_budget = std::size_t{1} << 22);

  std::int64_t sample(std::int64_t T, double u) const;
  std::int64_t cached_up_to() const { return static_cast<std::int64_t>(cdf_.size()) - 1; }

 private:
  KernelModel model_;
  double kappa_;
  std::vector<std::vector<double>> cdf_;  // cdf_[T][i] = sum_{l <= i - L} q_l(T)
};

/// Runs trajectories of one configuration. Holds the shared read-only state.
class TrajectoryRunner {
 public:
  explicit TrajectoryRunner(const EnsembleConfig& cfg);

  /// Momentum recorded at each cfg.sample_times entry for trajectory `stream_id`.
  std::vector<std::int64_t> run(std::uint64_t stream_id) const;
  void run_into(std::uint64_t stream_id, std::span<std::int64_t> out) const;

 private:
  void run_kernel(std::uint64_t stream_id, std::span<std::int64_t> out) const;
  void run_wavefunction(std::uint64_t stream_id, std::span<std::int64_t> out) const;

  EnsembleConfig cfg_;
  std::optional<IncrementSampler> sampler_;
  std::optional<FloquetOperator> floquet_;
};

std::vector<std::int64_t> run_trajectory(const EnsembleConfig& cfg, std::uint64_t stream_id);

struct VarianceSeries {
  std::vector<std::int64_t> times;
  std::vector<double> variance;
  std::vector<double> standard_error;  // delta method on the fourth central moment
  std::int64_t n_effective = 0;
};

struct EnsembleResult {
  VarianceSeries series;
  std::size_t n_times = 0;
  std::vector<std::int64_t> samples;  // row-major [trajectory][sample time]

  std::span<const std::int64_t> trajectory(std::size_t i) const {
    return std::span<const std::int64_t>(samples).subspan(i * n_times, n_times);
  }
};

/// Ensemble variance E[l^2] - E[l]^2 per sample time with delta-method standard errors
/// sqrt((mu4 - mu2^2) / n).
/// `samples` is row-major with times.size() columns.
VarianceSeries summarize_samples(std::span<const std::int64_t> samples, std::span<const std::int64_t> times);

EnsembleResult run_ensemble_detailed(const EnsembleConfig& cfg);
VarianceSeries run_ensemble(const EnsembleConfig& cfg);

struct MomentumDistribution {
  std::int64_t offset = 0;
  std::vector<double> probabilities;  // P_l for l = offset, offset+1, ...

  static MomentumDistribution delta(std::int64_t l = 0) { return {l, {1.0}}; }
  double probability(std::int64_t l) const;
  double mass() const;
  double mean() const;
  double variance() const;
};

struct MasterSnapshot {
  std::int64_t time = 0;
  MomentumDistribution distribution;
};

struct MasterResult {
  std::vector<MasterSnapshot> snapshots;      // one per requested time
  MomentumDistribution final_distribution;    // after the last interval
  std::vector<double> variance_after_interval;
};

/// P_l(t+T) = sum_j q_{l-j}(T) P_j(t) for each interval of the schedule. A snapshot at time s holds
/// the distribution after the last interval ending at or before s.
MasterResult propagate_master(const MomentumDistribution& initial, const MeasurementSchedule& schedule, double kappa,
                              std::span<const std::int64_t> snapshot_times = {},
                              KernelModel model = KernelModel::bessel());

/// sum_i sigma_q^2(T_i): (kappa^2/2) sum T_i^2 for Bessel kernels, sum T_i^beta for the synthetic one.
double schedule_variance(const MeasurementSchedule& schedule, double kappa, KernelModel model = KernelModel::bessel());

}  // namespace levy_rotor
