#pragma once

// Quantum kicked rotor on a truncated momentum lattice at resonance tau = 2 pi p/q:
// one-kick Floquet map, repeated evolution, and projective momentum measurement.

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace levy_rotor {

using Amplitude = std::complex<double>;

class ResonanceParams {
 public:
  /// Stores p/q in lowest terms. Throws DomainError unless p, q >= 1 and kappa > 0.
  ResonanceParams(std::int64_t p, std::int64_t q, double kappa);

  static ResonanceParams principal(double kappa) { return {1, 1, kappa}; }

  std::int64_t p() const { return p_; }
  std::int64_t q() const { return q_; }
  double kappa() const { return kappa_; }
  double tau() const;
  bool is_principal() const { return q_ == 1; }

  friend bool operator==(const ResonanceParams&, const ResonanceParams&) = default;

 private:
  std::int64_t p_;
  std::int64_t q_;
  double kappa_;
};

inline constexpr double kNormTolerance = 1e-9;

class WaveFunction {
 public:
  WaveFunction() = default;
  /// Amplitudes for momenta offset, offset+1, ...
  WaveFunction(std::int64_t offset, std::vector<Amplitude> amplitudes);

  /// |l> on a lattice of 2*half_window+1 sites centred at l.
  static WaveFunction eigenstate(std::int64_t l, std::int64_t half_window = 64);

  std::int64_t offset() const { return offset_; }
  std::int64_t lowest() const { return offset_; }
  std::int64_t highest() const { return offset_ + static_cast<std::int64_t>(amps_.size()) - 1; }
  std::size_t size() const { return amps_.size(); }
  const std::vector<Amplitude>& amplitudes() const { return amps_; }
  std::vector<Amplitude>& amplitudes() { return amps_; }

  Amplitude amplitude(std::int64_t l) const;
  double population(std::int64_t l) const { return std::norm(amplitude(l)); }
  double norm() const;
  double mean_momentum() const;
  double momentum_variance() const;

  /// Probability carried by the outermost `sites` sites on each side (summed over both sides).
  double boundary_probability(std::size_t sites) const;

  /// Pads `extra` zero sites on each side.
  void pad(std::size_t extra);
  /// Doubles the lattice (at least `min_extra` new sites per side), keeping it centred.
  void grow(std::size_t min_extra);

 private:
  std::int64_t offset_ = 0;
  std::vector<Amplitude> amps_;
};

/// Precomputed one-kick operator
///   a_l <- sum_j i^{-(j-l)} e^{-i j^2 tau} J_{j-l}(kappa) a_j.
class FloquetOperator {
 public:
  explicit FloquetOperator(const ResonanceParams& params);

  const ResonanceParams& params() const { return params_; }
  /// Kick coefficients c_d for d = l - j in [-M, M], c_d = i^{d} J_{-d}(kappa).
  const std::vector<Amplitude>& coefficients() const { return coeffs_; }
  int reach() const { return reach_; }
  /// Sites required on each side of the support before a kick: ceil(kappa) + 20, at least M + 5.
  std::size_t headroom() const { return headroom_; }
  /// e^{-i j^2 tau}, with j^2 reduced mod q in integer arithmetic.
  Amplitude kinetic_phase(std::int64_t j) const;

  /// True when the outermost headroom sites carry more than kBoundaryTolerance probability.
  bool needs_growth(const WaveFunction& psi) const;

  /// One kick in place. Throws LatticeGrowthRequired without touching psi if headroom is violated.
  void kick(WaveFunction& psi) const;
  /// T kicks, growing the lattice whenever headroom runs short.
  void evolve(WaveFunction& psi, std::int64_t T) const;

 private:
  ResonanceParams params_;
  int reach_ = 0;
  std::size_t headroom_ = 0;
  std::vector<Amplitude> coeffs_;
  std::vector<Amplitude> phase_table_;
};

// Probability allowed in the headroom band before the lattice must grow.
inline constexpr double kBoundaryTolerance = 1e-30;

WaveFunction apply_kick(const WaveFunction& psi, const ResonanceParams& params);
WaveFunction evolve(const WaveFunction& psi, const ResonanceParams& params, std::int64_t T);

struct MeasurementOutcome {
  std::int64_t momentum = 0;
  double probability = 0.0;  // pre-collapse |a_l|^2
};

/// Inverse-CDF draw over |a_l|^2 scanning ascending l with the supplied deviate u in [0, 1);
/// returns the outcome and the collapsed eigenstate |l>.
std::pair<MeasurementOutcome, WaveFunction> measure_momentum(const WaveFunction& psi, double u,
                                                             std::int64_t half_window = 64);

/// Outcome only; psi is not modified.
MeasurementOutcome sample_momentum(const WaveFunction& psi, double u);

}  // namespace levy_rotor
