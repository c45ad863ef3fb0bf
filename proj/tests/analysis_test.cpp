#include <doctest.h>

#include <cmath>
#include <vector>

#include "levy_rotor/analysis.hpp"
#include "levy_rotor/errors.hpp"
#include "oracles.hpp"

using namespace levy_rotor;

namespace {

VarianceSeries series_from(const std::vector<std::int64_t>& times, auto f) {
  VarianceSeries s;
  s.times = times;
  for (auto t : times) s.variance.push_back(f(static_cast<double>(t)));
  s.standard_error.assign(times.size(), 0.0);
  s.n_effective = 2;
  return s;
}

}  // namespace

TEST_CASE("exponent law branches") {
  const auto a = theoretical_exponent(0.5, 2.0);
  CHECK(a.c == 1.0);
  CHECK(a.regime == Regime::ballistic);
  const auto b = theoretical_exponent(1.5, 2.0);
  CHECK(b.c == 0.75);
  CHECK(b.regime == Regime::sub_ballistic);
  const auto c = theoretical_exponent(0.5, 1.0);
  CHECK(c.c == 0.5);
  CHECK(c.regime == Regime::diffusive);
  const auto d = theoretical_exponent(1.5, 1.0);
  CHECK(d.c == 0.5);
  CHECK(d.regime == Regime::diffusive);
  CHECK(theoretical_exponent(2.0, 2.0).c == 0.5);
  // alpha <= beta, alpha <= 1: c = beta/2.
  CHECK(theoretical_exponent(0.3, 0.6).c == doctest::Approx(0.3));
  // beta <= alpha <= 1: c = alpha/2, sub-diffusive.
  const auto e = theoretical_exponent(0.8, 0.3);
  CHECK(e.c == doctest::Approx(0.4));
  CHECK(e.regime == Regime::sub_diffusive);
  // alpha <= beta, alpha >= 1: (beta - alpha + 1)/2.
  CHECK(theoretical_exponent(1.2, 1.8).c == doctest::Approx(0.8));

  CHECK_THROWS_AS(theoretical_exponent(0.0, 2.0), DomainError);
  CHECK_THROWS_AS(theoretical_exponent(2.1, 2.0), DomainError);
  CHECK_THROWS_AS(theoretical_exponent(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(theoretical_exponent(1.0, 2.5), DomainError);
}

TEST_CASE("exponent law is continuous across branch lines") {
  const double h = 1e-9;
  for (double beta : {0.4, 1.0, 1.5, 2.0}) {
    CAPTURE(beta);
    CHECK(std::abs(theoretical_exponent(1.0 - h, beta).c - theoretical_exponent(1.0 + h, beta).c) < 1e-6);
  }
  for (double ab : {0.3, 0.9, 1.0, 1.4, 1.9}) {
    CAPTURE(ab);
    CHECK(std::abs(theoretical_exponent(ab, ab - h).c - theoretical_exponent(ab, ab + h).c) < 1e-6);
  }
}

TEST_CASE("beta = 2 is the two-branch kicked-rotor law") {
  for (int i = 1; i <= 20; ++i) {
    const double alpha = 0.1 * i;
    const double expect = alpha <= 1.0 ? 1.0 : (3.0 - alpha) / 2.0;
    CAPTURE(alpha);
    CHECK(theoretical_exponent(alpha, 2.0).c == expect);
  }
}

TEST_CASE("regime names") {
  CHECK(to_string(Regime::sub_ballistic) == "sub_ballistic");
  CHECK(to_string(Regime::sub_diffusive) == "sub_diffusive");
}

TEST_CASE("predicted variance") {
  SUBCASE("closed form against quadrature") {
    for (double alpha : {0.5, 1.0, 1.7}) {
      const double t = 500.0;
      const double ref =
          0.5 * t * oracle::censored_moment_quadrature(alpha, 2.0, t) / oracle::censored_moment_quadrature(alpha, 1.0, t);
      CHECK(predicted_variance(alpha, 1.0, t) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
  SUBCASE("kappa enters squared") {
    CHECK(predicted_variance(1.3, 2.0, 1e4) == doctest::Approx(4.0 * predicted_variance(1.3, 1.0, 1e4)).epsilon(1e-14));
  }
  SUBCASE("slope for alpha = 1.5") {
    for (double t : {1e3, 1e4, 1e5, 1e6})
      CHECK(std::abs(log_log_slope([](double x) { return predicted_variance(1.5, 1.0, x); }, t) - 1.5) < 0.05);
  }
  SUBCASE("ballistic ratio for alpha = 0.5") {
    CHECK(predicted_variance(0.5, 1.0, 1e6) / predicted_variance(0.5, 1.0, 1e5) == doctest::Approx(100.0).epsilon(0.01));
  }
  SUBCASE("asymptotic slope agrees with the exponent law") {
    for (double alpha : {0.5, 1.2, 1.5, 1.8}) {
      CAPTURE(alpha);
      const double s = log_log_slope([&](double x) { return predicted_variance(alpha, 1.0, x); }, 1e6);
      CHECK(std::abs(s - 2.0 * theoretical_exponent(alpha).c) < 0.05);
    }
    // alpha = 2 carries a logarithmic correction: d ln/d ln t = 1 + 1/(1/3 + ln t) - 1/(3t/2 - 1).
    const double t = 1e6;
    const double s = log_log_slope([](double x) { return predicted_variance(2.0, 1.0, x); }, t);
    CHECK(s == doctest::Approx(1.0 + 1.0 / (1.0 / 3.0 + std::log(t)) - 1.0 / (1.5 * t - 1.0)).epsilon(1e-6));
    CHECK(s > 1.05);
  }
  SUBCASE("alpha = 2 grows almost linearly") {
    const double r = predicted_variance(2.0, 1.0, 1e6) / predicted_variance(2.0, 1.0, 1e5);
    CHECK(r > 10.0);
    CHECK(r < 12.0);
  }
  SUBCASE("generalised estimate reduces to the Bessel one at beta = 2") {
    CHECK(predicted_variance_beta(1.4, 2.0, 1e5) == doctest::Approx(2.0 * predicted_variance(1.4, 1.0, 1e5)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(predicted_variance(1.5, 1.0, 0.5), DomainError);
}

TEST_CASE("power-law fit") {
  std::vector<std::int64_t> times;
  for (int i = 0; i <= 40; ++i) times.push_back(static_cast<std::int64_t>(std::llround(std::pow(10.0, 2.0 + i / 10.0))));

  SUBCASE("exact power law") {
    const auto f = fit_power_law(series_from(times, [](double t) { return 3.0 * std::pow(t, 1.5); }), 1.0);
    CHECK(f.slope == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.n_points == times.size());
  }
  SUBCASE("noise-free exponents recovered to 1e-12") {
    for (double s : {0.5, 1.0, 1.5, 2.0}) {
      const auto f = fit_power_law(series_from(times, [&](double t) { return 0.7 * std::pow(t, s); }), 1.0);
      CHECK(std::abs(f.slope - s) < 1e-12);
    }
  }
  SUBCASE("constant series") {
    const auto f = fit_power_law(series_from(times, [](double) { return 4.0; }), 1.0);
    CHECK(std::abs(f.slope) < 1e-14);
  }
  SUBCASE("closed-form input for alpha = 1.8") {
    const auto f = fit_power_law(series_from(times, [](double t) { return predicted_variance(1.8, 1.0, t); }), 1e4);
    CHECK(std::abs(f.slope - 1.2) < 0.05);
    CHECK(f.t_min >= 1e4);
  }
  SUBCASE("window and OLS oracle") {
    auto s = series_from(times, [](double t) { return std::pow(t, 1.2) * (1.0 + 0.1 * std::sin(t)); });
    const auto f = fit_power_law(s, 1e3, 1e5);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] < 1e3 || times[i] > 1e5) continue;
      x.push_back(std::log(static_cast<double>(times[i])));
      y.push_back(std::log(s.variance[i]));
    }
    CHECK(f.n_points == x.size());
    CHECK(f.slope == doctest::Approx(oracle::ols_slope(x, y)).epsilon(1e-12));
    CHECK(f.slope_stderr > 0.0);
    CHECK(f.residual_max > 0.0);
  }
  SUBCASE("refusals") {
    auto s = series_from(times, [](double t) { return t; });
    CHECK_THROWS_AS(fit_power_law(s, 3e5), NumericalError);
    s.variance[30] = 0.0;
    CHECK_THROWS_AS(fit_power_law(s, 1.0), NumericalError);
    CHECK_NOTHROW(fit_power_law(s, 1.0, 1e4));
  }
  CHECK(default_fit_t_min(1000000) == doctest::Approx(1000.0));
}

TEST_CASE("bootstrap band") {
  EnsembleConfig cfg;
  cfg.n_trajectories = 300;
  cfg.horizon = 10000;
  cfg.sample_times = log_spaced_times(cfg.horizon, 20);
  cfg.levy = LevyParams{1.5};
  const auto r = run_ensemble_detailed(cfg);
  const auto fit = fit_power_law(r.series, 100.0);
  const auto a = bootstrap_slope_band(r, 100.0, 100, 5);
  const auto b = bootstrap_slope_band(r, 100.0, 100, 5);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.resamples == 100);
  CHECK(a.lo < fit.slope);
  CHECK(fit.slope < a.hi);
  CHECK(a.hi - a.lo > 2.0 * fit.slope_stderr);
  const auto c = bootstrap_slope_band(r, 100.0, 100, 6);
  CHECK((c.lo != a.lo || c.hi != a.hi));
  CHECK_THROWS_AS(bootstrap_slope_band(r, 100.0, 5, 5), DomainError);
}
