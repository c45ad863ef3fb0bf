#include "levy_rotor/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "levy_rotor/errors.hpp"

namespace levy_rotor {

namespace {

// Rescaling step for the downward recurrence: 2^466 ~ 1e140 keeps squares finite.
constexpr int kRescaleExp = 466;
const double kRescaleThreshold = std::ldexp(1.0, kRescaleExp);

// Below this argument the two-term ascending series is exact to double precision.
constexpr double kSmallArgument = 1e-6;

void check_argument(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel: non-finite argument");
  if (x < 0.0) throw DomainError(fmt::format("bessel: negative argument x = {}", x));
}

std::vector<double> small_argument_range(int max_order, double x) {
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  const double h = 0.5 * x;
  const double h2 = h * h;
  double lead = 1.0;  // (x/2)^n / n!
  for (int n = 0; n <= max_order; ++n) {
    if (n > 0) lead *= h / n;
    if (lead == 0.0) break;
    out[static_cast<std::size_t>(n)] = lead * (1.0 - h2 / (n + 1));
  }
  return out;
}

struct Sweep {
  std::vector<double> values;  // normalised J_0..J_nmax
  double tail = 0.0;           // 2 * sum_{n > nmax} J_n^2
};

Sweep miller_sweep(int max_order, double x) {
  Sweep s;
  if (x == 0.0) {
    s.values.assign(static_cast<std::size_t>(max_order) + 1, 0.0);
    s.values[0] = 1.0;
    return s;
  }
  if (x < kSmallArgument) {
    s.values = small_argument_range(max_order, x);
    return s;
  }

  const int start = miller_start_order(max_order, x);
  std::vector<double> f(static_cast<std::size_t>(max_order) + 1, 0.0);
  std::vector<int> epoch(static_cast<std::size_t>(max_order) + 1, 0);

  int rescales = 0;
  double next = 0.0;  // f_{n+1}
  double cur = 1.0;   // f_n, seeded at n = start
  double sum_sq_high = 0.0;  // sum_{n > max_order, n >= 1} f_n^2
  double sum_sq_low = 0.0;   // sum_{1 <= n <= max_order} f_n^2
  double even_sum = 0.0;     // sum_{k >= 1} f_{2k}
  const double two_over_x = 2.0 / x;

  for (int n = start; n >= 0; --n) {
    if (n >= 1) {
      if (n > max_order) {
        sum_sq_high += cur * cur;
      } else {
        sum_sq_low += cur * cur;
      }
      if (n % 2 == 0) even_sum += cur;
    }
    if (n <= max_order) {
      f[static_cast<std::size_t>(n)] = cur;
      epoch[static_cast<std::size_t>(n)] = rescales;
    }
    if (n == 0) break;
    const double prev = n * two_over_x * cur - next;  // f_{n-1}
    next = cur;
    cur = prev;
    if (std::abs(cur) > kRescaleThreshold) {
      cur = std::ldexp(cur, -kRescaleExp);
      next = std::ldexp(next, -kRescaleExp);
      sum_sq_high = std::ldexp(sum_sq_high, -2 * kRescaleExp);
      sum_sq_low = std::ldexp(sum_sq_low, -2 * kRescaleExp);
      even_sum = std::ldexp(even_sum, -kRescaleExp);
      ++rescales;
    }
  }

  const double f0 = f[0];
  const double norm_sq = f0 * f0 + 2.0 * (sum_sq_low + sum_sq_high);
  double norm = std::sqrt(norm_sq);
  // J_0 + 2 sum J_{2k} = 1 fixes the overall sign.
  if (f0 + 2.0 * even_sum < 0.0) norm = -norm;

  s.values.resize(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) {
    const int shift = (rescales - epoch[n]) * kRescaleExp;
    s.values[n] = std::ldexp(f[n], -shift) / norm;
  }
  s.tail = 2.0 * sum_sq_high / norm_sq;
  return s;
}

}  // namespace

void BesselEvalConfig::validate() const {
  if (max_order < 1) throw DomainError("BesselEvalConfig: max_order must be >= 1");
  if (!(rel_tolerance > 0.0 && rel_tolerance < 1e-6))
    throw DomainError("BesselEvalConfig: rel_tolerance must lie in (0, 1e-6)");
}

int miller_start_order(int max_order, double x) {
  const double m = std::max(static_cast<double>(max_order), std::ceil(x));
  const double start = m + 30.0 + std::ceil(12.0 * std::cbrt(std::max(x, 1.0)));
  if (start > static_cast<double>(std::numeric_limits<int>::max() - 2))
    throw CapabilityError(fmt::format("bessel: argument {} too large for the recurrence", x));
  return static_cast<int>(start);
}

std::vector<double> bessel_j_range(int max_order, double x) {
  check_argument(x);
  if (max_order < 0) throw DomainError("bessel_j_range: negative max_order");
  return miller_sweep(max_order, x).values;
}

double bessel_j(int order, double x, const BesselEvalConfig& cfg) {
  cfg.validate();
  check_argument(x);
  const int n = order < 0 ? -order : order;
  if (n > cfg.max_order)
    throw CapabilityError(fmt::format("bessel_j: order {} exceeds configured max_order {}", order, cfg.max_order));
  const double v = miller_sweep(n, x).values[static_cast<std::size_t>(n)];
  return (order < 0 && (n % 2 == 1)) ? -v : v;
}

int kernel_half_width_guess(double x) {
  return static_cast<int>(std::ceil(x) + std::max(40.0, std::ceil(12.0 * std::cbrt(x))));
}

TransitionKernel build_kernel(double kappa, std::int64_t T, double tail_tol) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("build_kernel: kappa must be finite and > 0");
  if (T < 0) throw DomainError("build_kernel: negative interval");
  if (!(tail_tol > 0.0 && tail_tol <= 1e-6)) throw DomainError("build_kernel: tail_tol must lie in (0, 1e-6]");

  TransitionKernel k;
  k.kappa = kappa;
  k.interval = T;
  if (T == 0) {
    k.half_width = 0;
    k.weights = {1.0};
    return k;
  }

  const double x = kappa * static_cast<double>(T);
  if (!std::isfinite(x)) throw DomainError("build_kernel: kappa*T overflows");

  int L = kernel_half_width_guess(x);
  Sweep s = miller_sweep(L, x);
  while (s.tail >= tail_tol) {
    L += std::max(40, L / 2);
    s = miller_sweep(L, x);
  }

  k.half_width = L;
  k.weights.assign(static_cast<std::size_t>(2 * L + 1), 0.0);
  double tail_sum = 0.0;
  for (int l = L; l >= 1; --l) {
    const double j = s.values[static_cast<std::size_t>(l)];
    tail_sum += j * j;
  }
  const double j0 = s.values[0];
  const double mass = j0 * j0 + 2.0 * tail_sum;
  k.raw_mass = mass;
  for (int l = 0; l <= L; ++l) {
    const double j = s.values[static_cast<std::size_t>(l)];
    const double w = (j * j) / mass;
    k.weights[static_cast<std::size_t>(L + l)] = w;
    k.weights[static_cast<std::size_t>(L - l)] = w;
  }
  return k;
}

KernelMoments kernel_moments(const TransitionKernel& k) {
  KernelMoments m;
  const int L = k.half_width;
  // Pair +l with -l so that symmetric weights cancel exactly in m1.
  for (int l = L; l >= 1; --l) {
    const double wp = k.weights[static_cast<std::size_t>(L + l)];
    const double wn = k.weights[static_cast<std::size_t>(L - l)];
    const double dl = static_cast<double>(l);
    m.m1 += dl * (wp - wn);
    m.m2 += dl * dl * (wp + wn);
  }
  return m;
}

BesselIdentityRow bessel_identity_row(double x, const BesselEvalConfig& cfg) {
  cfg.validate();
  check_argument(x);
  BesselIdentityRow row;
  row.x = x;
  row.terms = static_cast<int>(std::ceil(x)) + 40;
  if (row.terms > cfg.max_order)
    throw CapabilityError(fmt::format("bessel identity at x = {} needs order {} > max_order {}", x, row.terms,
                                      cfg.max_order));
  const std::vector<double> j = bessel_j_range(row.terms, x);
  double mass = 0.0;
  double second = 0.0;
  for (int n = row.terms; n >= 1; --n) {
    const double v = j[static_cast<std::size_t>(n)];
    mass += 2.0 * v * v;
    second += 2.0 * static_cast<double>(n) * n * v * v;
  }
  mass += j[0] * j[0];
  row.mass_error = std::abs(mass - 1.0);
  const double expected = 0.5 * x * x;
  row.second_moment_rel_error = expected > 0.0 ? std::abs(second - expected) / expected : std::abs(second);
  return row;
}

}  // namespace levy_rotor
