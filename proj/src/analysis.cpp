#include "levy_rotor/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "levy_rotor/errors.hpp"
#include "levy_rotor/levy.hpp"
#include "levy_rotor/rng.hpp"

namespace levy_rotor {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::ballistic: return "ballistic";
    case Regime::sub_ballistic: return "sub_ballistic";
    case Regime::diffusive: return "diffusive";
    case Regime::sub_diffusive: return "sub_diffusive";
  }
  return "?";
}

ExponentPrediction theoretical_exponent(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError(fmt::format("theoretical_exponent: alpha = {} outside (0, 2]", alpha));
  if (!(beta > 0.0 && beta <= 2.0)) throw DomainError(fmt::format("theoretical_exponent: beta = {} outside (0, 2]", beta));

  ExponentPrediction e{alpha, beta, 0.0, Regime::diffusive};
  if (alpha <= beta) {
    e.c = alpha <= 1.0 ? 0.5 * beta : 0.5 * (beta - alpha + 1.0);
  } else {
    e.c = alpha <= 1.0 ? 0.5 * alpha : 0.5;
  }

  constexpr double eps = 1e-12;
  if (std::abs(e.c - 1.0) <= eps) {
    e.regime = Regime::ballistic;
  } else if (std::abs(e.c - 0.5) <= eps) {
    e.regime = Regime::diffusive;
  } else if (e.c > 0.5) {
    e.regime = Regime::sub_ballistic;
  } else {
    e.regime = Regime::sub_diffusive;
  }
  return e;
}

double predicted_variance(double alpha, double kappa, double t) {
  if (!(t >= 1.0)) throw DomainError(fmt::format("predicted_variance: t = {} < 1", t));
  const LevyParams p{alpha};
  return 0.5 * kappa * kappa * t * censored_moment(p, 2.0, t) / censored_moment(p, 1.0, t);
}

double predicted_variance_beta(double alpha, double beta, double t) {
  if (!(t >= 1.0)) throw DomainError(fmt::format("predicted_variance_beta: t = {} < 1", t));
  const LevyParams p{alpha};
  return t * censored_moment(p, beta, t) / censored_moment(p, 1.0, t);
}

double default_fit_t_min(std::int64_t horizon) { return std::sqrt(static_cast<double>(horizon)); }

namespace {

struct Ols {
  double slope, intercept, r2, resid_max, slope_se;
};

Ols ordinary_least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  Ols o{};
  o.slope = sxy / sxx;
  o.intercept = my - o.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (o.intercept + o.slope * x[i]);
    ss_res += r * r;
    o.resid_max = std::max(o.resid_max, std::abs(r));
  }
  o.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  o.slope_se = x.size() > 2 ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
  return o;
}

}  // namespace

PowerLawFit fit_power_law(const VarianceSeries& series, double t_min, double t_max) {
  if (series.times.size() != series.variance.size()) throw DomainError("fit_power_law: ragged series");
  std::vector<double> x;
  std::vector<double> y;
  PowerLawFit f;
  f.t_min = std::numeric_limits<double>::infinity();
  f.t_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const auto t = static_cast<double>(series.times[i]);
    if (t < t_min || t > t_max) continue;
    const double v = series.variance[i];
    if (!(v > 0.0))
      throw NumericalError(fmt::format("fit_power_law: non-positive variance {} at t = {}", v, series.times[i]));
    x.push_back(std::log(t));
    y.push_back(std::log(v));
    f.t_min = std::min(f.t_min, t);
    f.t_max = std::max(f.t_max, t);
  }
  if (x.size() < kMinFitPoints)
    throw NumericalError(fmt::format("fit_power_law: {} points in window, need {}", x.size(), kMinFitPoints));

  const Ols o = ordinary_least_squares(x, y);
  f.slope = o.slope;
  f.intercept = o.intercept;
  f.r_squared = o.r2;
  f.residual_max = o.resid_max;
  f.slope_stderr = o.slope_se;
  f.n_points = x.size();
  return f;
}

SlopeBand bootstrap_slope_band(const EnsembleResult& result, double t_min, int resamples, std::uint64_t seed,
                               double t_max) {
  if (resamples < 10) throw DomainError("bootstrap_slope_band: need at least 10 resamples");
  const std::size_t m = result.n_times;
  const std::size_t n = m == 0 ? 0 : result.samples.size() / m;
  if (n < 2) throw DomainError("bootstrap_slope_band: need at least 2 trajectories");

  const auto& times = result.series.times;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < m; ++c) {
    const auto t = static_cast<double>(times[c]);
    if (t >= t_min && t <= t_max) cols.push_back(c);
  }
  if (cols.size() < kMinFitPoints) throw NumericalError("bootstrap_slope_band: too few points in the window");

  UniformStream stream(seed);
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(resamples));
  std::vector<std::size_t> pick(n);
  std::vector<double> x(cols.size());
  std::vector<double> y(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) x[j] = std::log(static_cast<double>(times[cols[j]]));

  for (int b = 0; b < resamples; ++b) {
    for (auto& p : pick) p = static_cast<std::size_t>(stream.next() * static_cast<double>(n));
    bool usable = true;
    for (std::size_t j = 0; j < cols.size() && usable; ++j) {
      double s1 = 0.0;
      for (std::size_t p : pick) s1 += static_cast<double>(result.samples[p * m + cols[j]]);
      const double mean = s1 / static_cast<double>(n);
      double s2 = 0.0;
      for (std::size_t p : pick) {
        const double d = static_cast<double>(result.samples[p * m + cols[j]]) - mean;
        s2 += d * d;
      }
      const double var = s2 / static_cast<double>(n);
      if (!(var > 0.0)) usable = false;
      y[j] = std::log(var);
    }
    if (usable) slopes.push_back(ordinary_least_squares(x, y).slope);
  }
  if (slopes.size() < 10) throw NumericalError("bootstrap_slope_band: too many degenerate resamples");

  std::sort(slopes.begin(), slopes.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(slopes.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < slopes.size() ? slopes[i] * (1.0 - frac) + slopes[i + 1] * frac : slopes[i];
  };
  return {quantile(0.025), quantile(0.975), static_cast<int>(slopes.size())};
}

}  // namespace levy_rotor
