#include "levy_rotor/unitary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "levy_rotor/bessel.hpp"
#include "levy_rotor/convolution.hpp"
#include "levy_rotor/errors.hpp"

namespace levy_rotor {

ResonanceParams::ResonanceParams(std::int64_t p, std::int64_t q, double kappa) : p_(p), q_(q), kappa_(kappa) {
  if (p < 1 || q < 1) throw DomainError(fmt::format("resonance p/q = {}/{} must have p, q >= 1", p, q));
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("resonance: kappa must be finite and > 0");
  const std::int64_t g = std::gcd(p, q);
  p_ = p / g;
  q_ = q / g;
}

double ResonanceParams::tau() const {
  return 2.0 * std::numbers::pi * static_cast<double>(p_) / static_cast<double>(q_);
}

// ---------------------------------------------------------------------------------------------

WaveFunction::WaveFunction(std::int64_t offset, std::vector<Amplitude> amplitudes)
    : offset_(offset), amps_(std::move(amplitudes)) {}

WaveFunction WaveFunction::eigenstate(std::int64_t l, std::int64_t half_window) {
  if (half_window < 0) throw DomainError("eigenstate: negative window");
  std::vector<Amplitude> a(static_cast<std::size_t>(2 * half_window + 1));
  a[static_cast<std::size_t>(half_window)] = 1.0;
  return WaveFunction(l - half_window, std::move(a));
}

Amplitude WaveFunction::amplitude(std::int64_t l) const {
  if (l < lowest() || l > highest()) return {};
  return amps_[static_cast<std::size_t>(l - offset_)];
}

double WaveFunction::norm() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

double WaveFunction::mean_momentum() const {
  double s = 0.0;
  for (std::size_t i = 0; i < amps_.size(); ++i) s += static_cast<double>(offset_ + static_cast<std::int64_t>(i)) * std::norm(amps_[i]);
  return s / norm();
}

double WaveFunction::momentum_variance() const {
  const double mu = mean_momentum();
  double s = 0.0;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    const double d = static_cast<double>(offset_ + static_cast<std::int64_t>(i)) - mu;
    s += d * d * std::norm(amps_[i]);
  }
  return s / norm();
}

double WaveFunction::boundary_probability(std::size_t sites) const {
  if (2 * sites >= amps_.size()) return norm();
  double s = 0.0;
  for (std::size_t i = 0; i < sites; ++i) s += std::norm(amps_[i]) + std::norm(amps_[amps_.size() - 1 - i]);
  return s;
}

void WaveFunction::pad(std::size_t extra) {
  std::vector<Amplitude> a(amps_.size() + 2 * extra);
  std::copy(amps_.begin(), amps_.end(), a.begin() + static_cast<std::ptrdiff_t>(extra));
  amps_ = std::move(a);
  offset_ -= static_cast<std::int64_t>(extra);
}

void WaveFunction::grow(std::size_t min_extra) { pad(std::max(amps_.size() / 2 + 1, min_extra)); }

// ---------------------------------------------------------------------------------------------

namespace {

// |J_m(kappa)| below this is dropped from the kick stencil.
constexpr double kStencilCutoff = 1e-18;

// i^d for integer d.
Amplitude i_power(int d) {
  switch (((d % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

FloquetOperator::FloquetOperator(const ResonanceParams& params) : params_(params) {
  const double kappa = params.kappa();
  const int guess = static_cast<int>(std::ceil(kappa)) + 40 + static_cast<int>(std::ceil(12.0 * std::cbrt(kappa)));
  const std::vector<double> j = bessel_j_range(guess, kappa);
  int m = guess;
  while (m > 0 && std::abs(j[static_cast<std::size_t>(m)]) < kStencilCutoff) --m;
  reach_ = m;

  auto signed_j = [&](int k) {
    const int n = k < 0 ? -k : k;
    const double v = j[static_cast<std::size_t>(n)];
    return (k < 0 && n % 2 == 1) ? -v : v;
  };
  // c_d = i^{d} J_{-d}(kappa); even in d.
  coeffs_.resize(static_cast<std::size_t>(2 * m + 1));
  for (int d = -m; d <= m; ++d) coeffs_[static_cast<std::size_t>(d + m)] = i_power(d) * signed_j(-d);

  headroom_ = static_cast<std::size_t>(std::max<double>(std::ceil(kappa) + 20.0, m + 5));

  const std::int64_t q = params.q();
  phase_table_.resize(static_cast<std::size_t>(q));
  for (std::int64_t k = 0; k < q; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(q);
    phase_table_[static_cast<std::size_t>(k)] = {std::cos(angle), std::sin(angle)};
  }
}

Amplitude FloquetOperator::kinetic_phase(std::int64_t j) const {
  // j^2 tau = 2 pi p j^2 / q, so only p * j^2 mod q matters.
  const std::int64_t q = params_.q();
  const std::int64_t r = ((j % q) + q) % q;
  const std::int64_t k = static_cast<std::int64_t>((static_cast<__int128>(r) * r % q) * params_.p() % q);
  return phase_table_[static_cast<std::size_t>(k)];
}

bool FloquetOperator::needs_growth(const WaveFunction& psi) const {
  return psi.boundary_probability(headroom_) > kBoundaryTolerance;
}

void FloquetOperator::kick(WaveFunction& psi) const {
  if (needs_growth(psi))
    throw LatticeGrowthRequired(fmt::format("kick: lattice [{}, {}] lacks {} sites of headroom", psi.lowest(),
                                            psi.highest(), headroom_));
  std::vector<Amplitude>& a = psi.amplitudes();
  const std::size_t n = a.size();

  if (!params_.is_principal()) {
    for (std::size_t i = 0; i < n; ++i) a[i] *= kinetic_phase(psi.offset() + static_cast<std::int64_t>(i));
  }

  const std::size_t width = coeffs_.size();
  const int m = reach_;
  std::vector<Amplitude> out;
  if (width < kDirectConvolutionLimit) {
    // out[x] = sum_d c_d a[x - d], restricted to the lattice.
    out.assign(n, Amplitude{});
    const double* src = reinterpret_cast<const double*>(a.data());
    const double* c = reinterpret_cast<const double*>(coeffs_.data());
    double* dst = reinterpret_cast<double*>(out.data());
    const auto sn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t x = 0; x < sn; ++x) {
      const std::ptrdiff_t d_lo = std::max<std::ptrdiff_t>(-m, x - (sn - 1));
      const std::ptrdiff_t d_hi = std::min<std::ptrdiff_t>(m, x);
      double re = 0.0;
      double im = 0.0;
      for (std::ptrdiff_t d = d_lo; d <= d_hi; ++d) {
        const double cr = c[2 * (d + m)];
        const double ci = c[2 * (d + m) + 1];
        const double ar = src[2 * (x - d)];
        const double ai = src[2 * (x - d) + 1];
        re += cr * ar - ci * ai;
        im += cr * ai + ci * ar;
      }
      dst[2 * x] = re;
      dst[2 * x + 1] = im;
    }
  } else {
    const std::vector<Amplitude> full = convolve_fft(std::span<const Amplitude>(a), std::span<const Amplitude>(coeffs_));
    out.assign(full.begin() + m, full.begin() + m + static_cast<std::ptrdiff_t>(n));
  }
  a = std::move(out);
}

void FloquetOperator::evolve(WaveFunction& psi, std::int64_t T) const {
  if (T < 0) throw DomainError("evolve: negative number of kicks");
  for (std::int64_t t = 0; t < T; ++t) {
    while (needs_growth(psi)) psi.grow(2 * headroom_);
    kick(psi);
  }
}

WaveFunction apply_kick(const WaveFunction& psi, const ResonanceParams& params) {
  WaveFunction out = psi;
  FloquetOperator(params).kick(out);
  return out;
}

WaveFunction evolve(const WaveFunction& psi, const ResonanceParams& params, std::int64_t T) {
  WaveFunction out = psi;
  FloquetOperator(params).evolve(out, T);
  return out;
}

// ---------------------------------------------------------------------------------------------

MeasurementOutcome sample_momentum(const WaveFunction& psi, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError(fmt::format("measure_momentum: deviate u = {} outside [0, 1)", u));
  const auto& a = psi.amplitudes();
  if (a.empty()) throw DomainError("measure_momentum: empty wave function");
  double cum = 0.0;
  std::size_t last_nonzero = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = std::norm(a[i]);
    if (p <= 0.0) continue;
    last_nonzero = i;
    cum += p;
    if (cum > u) return {psi.offset() + static_cast<std::int64_t>(i), p};
  }
  // u beyond the accumulated mass (norm slightly below 1): the top of the support.
  if (last_nonzero == a.size()) throw NumericalError("measure_momentum: wave function has zero norm");
  return {psi.offset() + static_cast<std::int64_t>(last_nonzero), std::norm(a[last_nonzero])};
}

std::pair<MeasurementOutcome, WaveFunction> measure_momentum(const WaveFunction& psi, double u,
                                                             std::int64_t half_window) {
  MeasurementOutcome o = sample_momentum(psi, u);
  return {o, WaveFunction::eigenstate(o.momentum, half_window)};
}

}  // namespace levy_rotor
