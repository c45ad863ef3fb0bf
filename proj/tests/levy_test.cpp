#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "levy_rotor/errors.hpp"
#include "levy_rotor/levy.hpp"
#include "levy_rotor/rng.hpp"
#include "oracles.hpp"

using namespace levy_rotor;

TEST_CASE("density branches") {
  const LevyParams p{1.0};
  CHECK(density(p, 0.5) == 0.5);
  CHECK(density(p, 2.0) == 0.125);
  CHECK(density(p, 0.0) == 0.5);
  CHECK(density(p, 1.0) == 0.5);
}

TEST_CASE("density integrates to one") {
  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    CAPTURE(alpha);
    const double core = oracle::simpson([&](double t) { return oracle::levy_density(alpha, t); }, 0.0, 1.0, 2);
    // Tail in u = t^{-alpha}: int_1^inf a t^{-(alpha+1)} dt = (a/alpha) int_0^1 du.
    const double tail = oracle::simpson(
        [&](double u) {
          const double t = std::pow(u, -1.0 / alpha);
          return u == 0.0 ? alpha / (1.0 + alpha) / alpha : density(LevyParams{alpha}, t) * t / (alpha * u);
        },
        0.0, 1.0, 2000);
    CHECK(std::abs(core + tail - 1.0) < 1e-8);
  }
}

TEST_CASE("cdf against quadrature") {
  const LevyParams p{1.0};
  const double at1 = oracle::simpson([](double t) { return oracle::levy_density(1.0, t); }, 0.0, 1.0, 2);
  const double at2 = at1 + oracle::simpson([](double t) { return oracle::levy_density(1.0, t); }, 1.0, 2.0, 4000);
  CHECK(cdf(p, 1.0) == doctest::Approx(at1).epsilon(1e-12));
  CHECK(cdf(p, 2.0) == doctest::Approx(at2).epsilon(1e-12));
  CHECK(at1 == doctest::Approx(0.5));
  CHECK(at2 == doctest::Approx(0.75));
}

TEST_CASE("inverse_cdf") {
  const LevyParams p{1.0};
  CHECK(inverse_cdf(p, 0.0) == 0.0);
  CHECK(inverse_cdf(p, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(inverse_cdf(p, 0.75) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(inverse_cdf(p, 1.0), DomainError);
  CHECK_THROWS_AS(inverse_cdf(p, -1e-300), DomainError);

  for (double alpha : {0.3, 1.0, 1.5, 2.0}) {
    const LevyParams q{alpha};
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
      const double u = i / 1000.0;
      const double t = inverse_cdf(q, u);
      CHECK(t > prev);
      CHECK(std::abs(cdf(q, t) - u) < 1e-12);
      prev = t;
    }
    // Continuous at the breakpoint.
    const double a = q.core_mass();
    CHECK(inverse_cdf(q, std::nextafter(a, 0.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(inverse_cdf(q, a) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sample_interval floor policies") {
  CHECK(sample_interval(LevyParams{1.5}, 0.1) == 0);
  CHECK(sample_interval(LevyParams{1.0}, 0.75) == 2);
  CHECK(sample_interval(LevyParams{1.5, FloorPolicy::floor_min_one}, 0.1) == 1);
  CHECK(sample_interval(LevyParams{1.5, FloorPolicy::ceil}, 0.1) == 1);
  CHECK(sample_interval(LevyParams{1.0, FloorPolicy::ceil}, 0.75) == 2);
  CHECK(sample_interval(LevyParams{0.1}, 1.0 - 0x1.0p-53) == kMaxInterval);

  // P(T = 0) = alpha / (1 + alpha) under floor_allow_zero.
  const LevyParams p{1.5};
  UniformStream u(5);
  int zeros = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) zeros += sample_interval(p, u.next()) == 0;
  const double expect = 0.6;
  CHECK(std::abs(zeros / static_cast<double>(n) - expect) < 4.0 * std::sqrt(expect * (1 - expect) / n));
}

TEST_CASE("censored_moment closed forms") {
  CHECK(censored_moment(LevyParams{1.0}, 1.0, std::exp(2.0)) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(censored_moment(LevyParams{2.0}, 2.0, 10.0) ==
        doctest::Approx(2.0 / 3.0 * (1.0 / 3.0 + std::log(10.0))).epsilon(1e-14));
  const double q = oracle::censored_moment_quadrature(1.5, 2.0, 100.0);
  CHECK(std::abs(censored_moment(LevyParams{1.5}, 2.0, 100.0) - q) / q < 1e-8);
  for (auto [alpha, beta, t] : {std::tuple{0.5, 1.0, 1e3}, {1.2, 1.0, 50.0}, {1.8, 0.4, 1e4}, {2.0, 1.0, 7.0}}) {
    CAPTURE(alpha);
    CAPTURE(beta);
    const double ref = oracle::censored_moment_quadrature(alpha, beta, t);
    CHECK(std::abs(censored_moment(LevyParams{alpha}, beta, t) - ref) / ref < 1e-8);
  }
  CHECK_THROWS_AS(censored_moment(LevyParams{1.0}, 1.0, 0.5), DomainError);
}

TEST_CASE("censored_moment is smooth across beta = alpha") {
  const LevyParams p{1.3};
  const double at = censored_moment(p, 1.3, 1e4);
  CHECK(censored_moment(p, 1.3 + 1e-9, 1e4) == doctest::Approx(at).epsilon(1e-7));
  CHECK(censored_moment(p, 1.3 - 1e-9, 1e4) == doctest::Approx(at).epsilon(1e-7));
}

TEST_CASE("censored_moment grows like t^{beta - alpha}") {
  const LevyParams p{1.5};
  const double slope =
      std::log(censored_moment(p, 2.0, 1e6) / censored_moment(p, 2.0, 1e3)) / std::log(1e3);
  CHECK(std::abs(slope - 0.5) < 0.02);
}

TEST_CASE("empirical distribution") {
  const int n = 1000000;
  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    CAPTURE(alpha);
    const LevyParams p{alpha};
    UniformStream u(derive_seed(17, static_cast<std::uint64_t>(alpha * 10)));
    std::vector<double> xs(n);
    double censored = 0.0;
    for (auto& x : xs) {
      x = inverse_cdf(p, u.next());
      if (x <= 1e3) censored += x;
    }
    CHECK(oracle::ks_statistic(xs, [&](double t) { return cdf(p, t); }) < 1.63 / std::sqrt(n));
    if (alpha >= 1.0) {
      const double expect = censored_moment(p, 1.0, 1e3);
      CHECK(std::abs(censored / n - expect) / expect < 0.02);
    }
  }
}

TEST_CASE("schedules") {
  const LevyParams p{1.2};
  UniformStream a(3), b(3);
  const auto s = MeasurementSchedule::draw(p, 5000, a);
  std::int64_t sum = 0;
  for (auto T : s.intervals) {
    CHECK(T >= 0);
    sum += T;
  }
  CHECK(sum == s.realized_time);
  CHECK(s.realized_time >= 5000);
  CHECK(s.realized_time - s.intervals.back() < 5000);
  const auto again = MeasurementSchedule::draw(p, 5000, b);
  CHECK(again.intervals == s.intervals);

  UniformStream c(4);
  const auto counted = MeasurementSchedule::draw_count(p, 1234, c);
  CHECK(counted.intervals.size() == 1234);

  const auto fixed = MeasurementSchedule::from_intervals({3, 4}, 7);
  CHECK(fixed.realized_time == 7);
  CHECK_THROWS_AS(MeasurementSchedule::from_intervals({3, -1}), DomainError);
}

TEST_CASE("floor policy names round-trip") {
  for (auto f : {FloorPolicy::floor_allow_zero, FloorPolicy::floor_min_one, FloorPolicy::ceil})
    CHECK(parse_floor_policy(to_string(f)) == f);
  CHECK_THROWS_AS(parse_floor_policy("round"), ConfigError);
}

TEST_CASE("derived seeds") {
  static_assert(derive_seed(1, 2) == splitmix64(1 ^ splitmix64(2)));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  UniformStream s1(42, Lane::schedule), s2(42, Lane::measurement);
  CHECK(s1.next() != s2.next());
  UniformStream s(0);
  for (int i = 0; i < 1000; ++i) {
    const double x = s.next();
    CHECK((x >= 0.0 && x < 1.0));
  }
}
