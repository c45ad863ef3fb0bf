#include "levy_rotor/levy.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "levy_rotor/errors.hpp"

namespace levy_rotor {

std::string_view to_string(FloorPolicy p) {
  switch (p) {
    case FloorPolicy::floor_allow_zero: return "floor_allow_zero";
    case FloorPolicy::floor_min_one: return "floor_min_one";
    case FloorPolicy::ceil: return "ceil";
  }
  return "?";
}

FloorPolicy parse_floor_policy(std::string_view s) {
  if (s == "floor_allow_zero") return FloorPolicy::floor_allow_zero;
  if (s == "floor_min_one") return FloorPolicy::floor_min_one;
  if (s == "ceil") return FloorPolicy::ceil;
  throw ConfigError(fmt::format("unknown floor policy '{}'", s));
}

void LevyParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError(fmt::format("levy: alpha = {} outside (0, 2]", alpha));
}

double density(const LevyParams& params, double t) {
  params.validate();
  if (!(t >= 0.0)) throw DomainError("levy density: t must be >= 0");
  const double a = params.core_mass();
  return t < 1.0 ? a : a * std::pow(t, -(params.alpha + 1.0));
}

double cdf(const LevyParams& params, double t) {
  params.validate();
  if (!(t >= 0.0)) return 0.0;
  const double a = params.core_mass();
  if (t < 1.0) return a * t;
  return 1.0 - std::pow(t, -params.alpha) / (1.0 + params.alpha);
}

double inverse_cdf(const LevyParams& params, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError(fmt::format("levy inverse_cdf: u = {} outside [0, 1)", u));
  const double alpha = params.alpha;
  const double a = alpha / (1.0 + alpha);
  if (u < a) return u / a;
  return std::pow((1.0 + alpha) * (1.0 - u), -1.0 / alpha);
}

std::int64_t sample_interval(const LevyParams& params, double u) {
  const double t = inverse_cdf(params, u);
  double T = 0.0;
  switch (params.floor_policy) {
    case FloorPolicy::floor_allow_zero: T = std::floor(t); break;
    case FloorPolicy::floor_min_one: T = std::max(1.0, std::floor(t)); break;
    case FloorPolicy::ceil: T = std::ceil(t); break;
  }
  if (!(T < static_cast<double>(kMaxInterval))) return kMaxInterval;
  return static_cast<std::int64_t>(T);
}

double censored_moment(const LevyParams& params, double beta, double horizon) {
  params.validate();
  if (!(beta > 0.0)) throw DomainError("censored_moment: beta must be > 0");
  if (!(horizon >= 1.0)) throw DomainError(fmt::format("censored_moment: horizon {} < 1", horizon));
  const double alpha = params.alpha;
  const double log_t = std::log(horizon);
  const double d = beta - alpha;
  // (t^d - 1)/d through expm1 stays accurate as d -> 0; d == 0 is the logarithmic branch.
  const double growth = d == 0.0 ? log_t : std::expm1(d * log_t) / d;
  return alpha / (alpha + 1.0) * (1.0 / (beta + 1.0) + growth);
}

MeasurementSchedule MeasurementSchedule::from_intervals(std::vector<std::int64_t> intervals, std::int64_t horizon) {
  MeasurementSchedule s;
  for (std::int64_t T : intervals) {
    if (T < 0) throw DomainError("schedule: negative interval");
    s.realized_time += T;
  }
  s.intervals = std::move(intervals);
  s.horizon = horizon;
  return s;
}

MeasurementSchedule MeasurementSchedule::draw(const LevyParams& params, std::int64_t horizon, UniformStream& stream) {
  params.validate();
  if (horizon < 1) throw DomainError("schedule: horizon must be >= 1");
  MeasurementSchedule s;
  s.horizon = horizon;
  while (s.realized_time < horizon) {
    const std::int64_t T = sample_interval(params, stream.next());
    s.intervals.push_back(T);
    s.realized_time = T >= kMaxInterval - s.realized_time ? kMaxInterval : s.realized_time + T;
  }
  return s;
}

MeasurementSchedule MeasurementSchedule::draw_count(const LevyParams& params, std::size_t count,
                                                    UniformStream& stream) {
  params.validate();
  MeasurementSchedule s;
  s.intervals.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::int64_t T = sample_interval(params, stream.next());
    s.intervals.push_back(T);
    s.realized_time = T >= kMaxInterval - s.realized_time ? kMaxInterval : s.realized_time + T;
  }
  s.horizon = s.realized_time;
  return s;
}

}  // namespace levy_rotor
