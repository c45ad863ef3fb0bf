#pragma once

// Levy waiting-time law
//   rho(t) = alpha/(1+alpha)                    0 <= t < 1
//            alpha/(1+alpha) * t^{-(alpha+1)}   t >= 1
// with exact inversion, integer flooring of waits, and horizon-censored moments.

#include <cstdint>
#include <string_view>
#include <vector>

#include "levy_rotor/rng.hpp"

namespace levy_rotor {

enum class FloorPolicy {
  floor_allow_zero,  // T = floor(t); T = 0 is a no-op measurement
  floor_min_one,     // T = max(1, floor(t))
  ceil,              // T = ceil(t)
};

std::string_view to_string(FloorPolicy p);
FloorPolicy parse_floor_policy(std::string_view s);

struct LevyParams {
  double alpha = 1.5;
  FloorPolicy floor_policy = FloorPolicy::floor_allow_zero;

  void validate() const;
  /// P(t < 1) = alpha/(1+alpha).
  double core_mass() const { return alpha / (1.0 + alpha); }
};

// Largest wait returned by sample_interval; longer draws saturate here.
inline constexpr std::int64_t kMaxInterval = std::int64_t{1} << 62;

double density(const LevyParams& params, double t);
double cdf(const LevyParams& params, double t);
/// Continuous wait for u in [0, 1); DomainError otherwise.
double inverse_cdf(const LevyParams& params, double u);
/// inverse_cdf followed by the floor policy.
std::int64_t sample_interval(const LevyParams& params, double u);

/// int_0^horizon t^beta rho(t) dt (not renormalised). horizon >= 1.
double censored_moment(const LevyParams& params, double beta, double horizon);

struct MeasurementSchedule {
  std::vector<std::int64_t> intervals;
  std::int64_t horizon = 0;
  std::int64_t realized_time = 0;

  /// Builds a schedule from explicit intervals; realized_time is their sum.
  static MeasurementSchedule from_intervals(std::vector<std::int64_t> intervals, std::int64_t horizon = 0);
  /// Draws intervals until realized_time >= horizon. The last interval may overshoot.
  static MeasurementSchedule draw(const LevyParams& params, std::int64_t horizon, UniformStream& stream);
  /// Draws exactly `count` intervals.
  static MeasurementSchedule draw_count(const LevyParams& params, std::size_t count, UniformStream& stream);
};

}  // namespace levy_rotor
