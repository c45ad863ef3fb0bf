#pragma once

// Exponent law for the averaged variance <sigma^2(t)> ~ t^{2c}, its finite-time prediction,
// and power-law fits of simulated variance series.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

#include "levy_rotor/engine.hpp"

namespace levy_rotor {

enum class Regime { ballistic, sub_ballistic, diffusive, sub_diffusive };

std::string_view to_string(Regime r);

struct ExponentPrediction {
  double alpha = 0.0;
  double beta = 0.0;
  double c = 0.0;
  Regime regime = Regime::diffusive;
};

/// c(alpha, beta):
///   beta/2            alpha <= beta, alpha <= 1
///   (beta-alpha+1)/2  alpha <= beta, alpha >= 1
///   alpha/2           beta <= alpha <= 1
///   1/2               beta <= alpha, alpha >= 1
/// beta = 2 is the kicked-rotor case: c = 1 for alpha <= 1, (3 - alpha)/2 above.
ExponentPrediction theoretical_exponent(double alpha, double beta = 2.0);

/// (kappa^2/2) t <T^2>_t / <T>_t with horizon-censored moments.
double predicted_variance(double alpha, double kappa, double t);

/// t <T^beta>_t / <T>_t: the same estimate for a kernel with sigma_q^2(T) = T^beta.
double predicted_variance_beta(double alpha, double beta, double t);

struct PowerLawFit {
  double slope = 0.0;       // estimate of 2c
  double intercept = 0.0;   // ln A in sigma^2 = A t^slope
  double r_squared = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double residual_max = 0.0;
  double slope_stderr = 0.0;  // OLS standard error
  std::size_t n_points = 0;
};

inline constexpr std::size_t kMinFitPoints = 8;

/// OLS of ln(variance) on ln(t) over t_min <= t <= t_max.
/// Throws NumericalError with fewer than kMinFitPoints points or a non-positive variance in the window.
PowerLawFit fit_power_law(const VarianceSeries& series, double t_min,
                          double t_max = std::numeric_limits<double>::infinity());

/// Default fit window start: horizon^{1/2}.
double default_fit_t_min(std::int64_t horizon);

struct SlopeBand {
  double lo = 0.0;   // 2.5th percentile
  double hi = 0.0;   // 97.5th percentile
  int resamples = 0;
};

/// Percentile band of the fitted slope under resampling whole trajectories with replacement.
SlopeBand bootstrap_slope_band(const EnsembleResult& result, double t_min, int resamples, std::uint64_t seed,
                               double t_max = std::numeric_limits<double>::infinity());

/// Local log-log slope d ln f / d ln t by central differences with step h in ln t.
template <typename F>
double log_log_slope(F&& f, double t, double h = 1e-3) {
  const double up = std::log(f(t * std::exp(h)));
  const double down = std::log(f(t * std::exp(-h)));
  return (up - down) / (2.0 * h);
}

}  // namespace levy_rotor
