#pragma once

// Integer-order cylindrical Bessel functions J_n(x) and the measurement-to-measurement
// transition kernel q_l(T) = J_l(kappa*T)^2 built from them.

#include <cstdint>
#include <utility>
#include <vector>

namespace levy_rotor {

struct BesselEvalConfig {
  int max_order = 1 << 20;
  double rel_tolerance = 1e-12;

  void validate() const;
};

/// J_order(x) for x >= 0. Negative orders use J_{-n} = (-1)^n J_n.
/// Throws CapabilityError when |order| > cfg.max_order and DomainError for x < 0 or non-finite x.
double bessel_j(int order, double x, const BesselEvalConfig& cfg = {});

/// J_0(x), ..., J_{max_order}(x) in one downward (Miller) sweep normalised by
/// J_0^2 + 2 sum_{n>=1} J_n^2 = 1. Cost is linear in max(max_order, x).
std::vector<double> bessel_j_range(int max_order, double x);

/// Starting order of the downward recurrence used for (max_order, x).
int miller_start_order(int max_order, double x);

struct TransitionKernel {
  int half_width = 0;            // L; weights cover l in [-L, L]
  std::vector<double> weights;   // weights[l + L] = q_l(T)
  double kappa = 0.0;            // 0 for kernels not built from Bessel functions
  std::int64_t interval = 0;     // T
  double raw_mass = 1.0;         // sum of weights before renormalisation

  double weight(int l) const {
    return (l < -half_width || l > half_width) ? 0.0 : weights[static_cast<std::size_t>(l + half_width)];
  }
  std::size_t size() const { return weights.size(); }
};

inline constexpr double kDefaultTailTolerance = 1e-10;

/// Initial half-width guess ceil(x) + max(40, ceil(12 x^{1/3})) for x = kappa*T.
int kernel_half_width_guess(double x);

/// q_l(T) = J_l(kappa T)^2 on [-L, L], L grown until the truncated tail mass is below
/// tail_tol, then renormalised to unit mass. T = 0 gives the delta kernel.
TransitionKernel build_kernel(double kappa, std::int64_t T, double tail_tol = kDefaultTailTolerance);

struct KernelMoments {
  double m1 = 0.0;
  double m2 = 0.0;
};

/// First and second moments, summed pairwise over +-l so m1 of a symmetric kernel is exactly 0.
KernelMoments kernel_moments(const TransitionKernel& k);

struct BesselIdentityRow {
  double x = 0.0;
  int terms = 0;          // N in sum_{n=-N}^{N}
  double mass_error = 0;  // |sum J_n^2 - 1|
  double second_moment_rel_error = 0;  // |sum n^2 J_n^2 - x^2/2| / (x^2/2), 0 at x = 0
};

/// Identity suite sum J_n(x)^2 = 1 and sum n^2 J_n(x)^2 = x^2/2 with N = ceil(x) + 40.
/// Every J_n is evaluated through bessel_j under cfg, so a small max_order raises CapabilityError.
BesselIdentityRow bessel_identity_row(double x, const BesselEvalConfig& cfg = {});

}  // namespace levy_rotor
