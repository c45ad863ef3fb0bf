#pragma once

// Reference computations used only by tests. None of these call into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_100;

// Ascending series J_n(x) = sum_k (-1)^k (x/2)^{2k+n} / (k! (k+n)!) in 100-digit arithmetic.
// Terms run until they fall below 1e-60 relative to the largest one (at least 30 terms).
inline double bessel_series(int n, double x) {
  const bool negate = n < 0 && (n % 2 != 0);
  n = std::abs(n);
  const Big half = Big(x) / 2;
  Big term = 1;
  for (int j = 1; j <= n; ++j) term *= half / j;
  Big sum = term;
  Big largest = abs(term);
  const Big h2 = half * half;
  for (int k = 1; k < 4000; ++k) {
    term *= -h2 / (Big(k) * Big(k + n));
    sum += term;
    largest = std::max(largest, Big(abs(term)));
    if (k >= 30 && abs(term) < largest * Big("1e-60")) break;
  }
  const double v = static_cast<double>(sum);
  return negate ? -v : v;
}

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// The Levy density written out independently of the library.
inline double levy_density(double alpha, double t) {
  const double a = alpha / (1.0 + alpha);
  return t < 1.0 ? a : a * std::pow(t, -(alpha + 1.0));
}

// int_0^horizon t^beta rho(t) dt by Simpson: t = s^4 on the core (removes the endpoint
// singularity of t^beta) and log t on the tail.
inline double censored_moment_quadrature(double alpha, double beta, double horizon) {
  const double core = simpson(
      [&](double s) { return std::pow(s, 4.0 * beta) * levy_density(alpha, 0.0) * 4.0 * s * s * s; }, 0.0, 1.0, 4000);
  const double tail = simpson(
      [&](double u) {
        const double t = std::exp(u);
        return std::pow(t, beta) * levy_density(alpha, t) * t;
      },
      0.0, std::log(horizon), 20000);
  return core + tail;
}

// Textbook O(nm) convolution.
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

// Variance of a lattice distribution with probabilities p[i] at l = offset + i.
inline double lattice_variance(std::int64_t offset, const std::vector<double>& p) {
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double l = static_cast<double>(offset + static_cast<std::int64_t>(i));
    m0 += p[i];
    m1 += l * p[i];
    m2 += l * l * p[i];
  }
  m1 /= m0;
  return m2 / m0 - m1 * m1;
}

// Two-sided Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// OLS slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
