#include "levy_rotor/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "levy_rotor/convolution.hpp"
#include "levy_rotor/errors.hpp"
#include "levy_rotor/rng.hpp"

namespace levy_rotor {

std::string_view to_string(EngineKind e) {
  return e == EngineKind::closed_form_kernel ? "kernel" : "wavefunction";
}

EngineKind parse_engine(std::string_view s) {
  if (s == "kernel" || s == "closed_form_kernel") return EngineKind::closed_form_kernel;
  if (s == "wavefunction" || s == "full_wavefunction") return EngineKind::full_wavefunction;
  throw ConfigError(fmt::format("unknown engine '{}' (expected kernel or wavefunction)", s));
}

std::string_view to_string(SampleSemantics s) {
  return s == SampleSemantics::held_after_collapse ? "held_after_collapse" : "virtual_measurement";
}

SampleSemantics parse_sample_semantics(std::string_view s) {
  if (s == "held_after_collapse") return SampleSemantics::held_after_collapse;
  if (s == "virtual_measurement") return SampleSemantics::virtual_measurement;
  throw ConfigError(fmt::format("unknown sample semantics '{}'", s));
}

std::vector<std::int64_t> log_spaced_times(std::int64_t horizon, int points_per_decade) {
  if (horizon < 1) throw ConfigError("sample times: horizon must be >= 1");
  if (points_per_decade < 1) throw ConfigError("sample times: points_per_decade must be >= 1");
  std::vector<std::int64_t> t;
  for (int k = 0;; ++k) {
    const double v = std::pow(10.0, static_cast<double>(k) / points_per_decade);
    const auto r = static_cast<std::int64_t>(std::llround(v));
    if (r > horizon) break;
    if (t.empty() || r > t.back()) t.push_back(r);
  }
  if (t.back() < horizon) t.push_back(horizon);
  return t;
}

void EnsembleConfig::validate() const {
  if (n_trajectories < 2) throw ConfigError("ensemble: n_trajectories must be >= 2");
  if (horizon < 1) throw ConfigError("ensemble: horizon must be >= 1");
  if (sample_times.empty()) throw ConfigError("ensemble: no sample times");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < 1 || sample_times[i] > horizon)
      throw ConfigError(fmt::format("ensemble: sample time {} outside [1, {}]", sample_times[i], horizon));
    if (i > 0 && sample_times[i] <= sample_times[i - 1])
      throw ConfigError("ensemble: sample times must be strictly increasing");
  }
  try {
    levy.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (kernel_model.is_synthetic()) {
    if (!(kernel_model.beta > 0.0 && kernel_model.beta <= 2.0))
      throw ConfigError(fmt::format("ensemble: synthetic beta = {} outside (0, 2]", kernel_model.beta));
    if (engine == EngineKind::full_wavefunction)
      throw ConfigError("ensemble: the synthetic kernel has no wave-function engine");
  } else if (engine == EngineKind::closed_form_kernel && !resonance.is_principal()) {
    throw ConfigError("ensemble: closed_form_kernel requires principal resonance (p/q integer)");
  }
  if (semantics == SampleSemantics::virtual_measurement && engine != EngineKind::full_wavefunction)
    throw ConfigError("ensemble: virtual_measurement sampling needs the wavefunction engine");
  if (fixed_schedule) {
    for (std::int64_t T : *fixed_schedule)
      if (T < 0) throw ConfigError("ensemble: fixed schedule has a negative interval");
  }
  if (threads < 1) throw ConfigError("ensemble: threads must be >= 1");
}

// ---------------------------------------------------------------------------------------------

ThreePointKernel synthetic_three_point(double beta, std::int64_t T) {
  if (!(beta > 0.0 && beta <= 2.0)) throw DomainError(fmt::format("synthetic kernel: beta = {} outside (0, 2]", beta));
  if (T < 0) throw DomainError("synthetic kernel: negative interval");
  if (T == 0) return {0, 0.0};
  const double target = std::pow(static_cast<double>(T), beta);
  const auto k = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(T), 0.5 * beta)));
  const double kk = static_cast<double>(k) * static_cast<double>(k);
  return {k, std::min(1.0, target / kk)};
}

TransitionKernel synthetic_kernel(double beta, std::int64_t T) {
  const ThreePointKernel tp = synthetic_three_point(beta, T);
  TransitionKernel k;
  k.interval = T;
  k.half_width = static_cast<int>(tp.k);
  k.weights.assign(static_cast<std::size_t>(2 * tp.k + 1), 0.0);
  k.weights[static_cast<std::size_t>(tp.k)] = 1.0 - tp.p;
  if (tp.k > 0) {
    k.weights.front() = 0.5 * tp.p;
    k.weights.back() = 0.5 * tp.p;
  }
  return k;
}

namespace {

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s += w[i];
    c[i] = s;
  }
  return c;
}

// First index whose cumulative mass exceeds u; the last index when rounding leaves none.
std::size_t inverse_index(std::span<const double> cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
}

std::int64_t three_point_draw(const ThreePointKernel& tp, double u) {
  if (tp.k == 0) return 0;
  const double half = 0.5 * tp.p;
  if (u < half) return -tp.k;
  if (u < 1.0 - half) return 0;
  return tp.k;
}

}  // namespace

IncrementSampler::IncrementSampler(KernelModel model, double kappa, std::int64_t max_interval,
                                   std::size_t cache_budget)
    : model_(model), kappa_(kappa) {
  cdf_.emplace_back(std::vector<double>{1.0});  // T = 0
  if (model_.is_synthetic()) return;
  std::size_t used = 0;
  for (std::int64_t T = 1; T <= max_interval; ++T) {
    const std::size_t need = 2 * static_cast<std::size_t>(kernel_half_width_guess(kappa * static_cast<double>(T))) + 1;
    if (used + need > cache_budget) break;
    cdf_.push_back(cumulative(build_kernel(kappa, T).weights));
    used += cdf_.back().size();
  }
}

std::int64_t IncrementSampler::sample(std::int64_t T, double u) const {
  if (T == 0) return 0;
  if (model_.is_synthetic()) return three_point_draw(synthetic_three_point(model_.beta, T), u);
  if (T < static_cast<std::int64_t>(cdf_.size())) {
    const std::vector<double>& c = cdf_[static_cast<std::size_t>(T)];
    const auto L = static_cast<std::int64_t>(c.size() / 2);
    return static_cast<std::int64_t>(inverse_index(c, u)) - L;
  }
  const TransitionKernel k = build_kernel(kappa_, T);
  double cum = 0.0;
  for (std::size_t i = 0; i < k.weights.size(); ++i) {
    cum += k.weights[i];
    if (cum > u) return static_cast<std::int64_t>(i) - k.half_width;
  }
  return k.half_width;
}

// ---------------------------------------------------------------------------------------------

namespace {

// Supplies the waiting times of one trajectory.
class IntervalSource {
 public:
  IntervalSource(const EnsembleConfig& cfg, UniformStream& stream) : cfg_(cfg), stream_(stream) {}

  // False once a fixed schedule is exhausted.
  bool next(std::int64_t& T) {
    if (cfg_.fixed_schedule) {
      if (pos_ >= cfg_.fixed_schedule->size()) return false;
      T = (*cfg_.fixed_schedule)[pos_++];
      return true;
    }
    T = sample_interval(cfg_.levy, stream_.next());
    return true;
  }

 private:
  const EnsembleConfig& cfg_;
  UniformStream& stream_;
  std::size_t pos_ = 0;
};

}  // namespace

TrajectoryRunner::TrajectoryRunner(const EnsembleConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.engine == EngineKind::closed_form_kernel) {
    sampler_.emplace(cfg_.kernel_model, cfg_.resonance.kappa(), cfg_.horizon);
  } else {
    floquet_.emplace(cfg_.resonance);
  }
}

std::vector<std::int64_t> TrajectoryRunner::run(std::uint64_t stream_id) const {
  std::vector<std::int64_t> out(cfg_.sample_times.size());
  run_into(stream_id, out);
  return out;
}

void TrajectoryRunner::run_into(std::uint64_t stream_id, std::span<std::int64_t> out) const {
  if (out.size() != cfg_.sample_times.size()) throw DomainError("run_into: output span has the wrong length");
  if (cfg_.engine == EngineKind::closed_form_kernel) {
    run_kernel(stream_id, out);
  } else {
    run_wavefunction(stream_id, out);
  }
}

void TrajectoryRunner::run_kernel(std::uint64_t stream_id, std::span<std::int64_t> out) const {
  const std::uint64_t seed = derive_seed(cfg_.master_seed, stream_id);
  UniformStream schedule(seed, Lane::schedule);
  UniformStream measurement(seed, Lane::measurement);
  IntervalSource source(cfg_, schedule);

  const auto& times = cfg_.sample_times;
  const std::size_t n = times.size();
  std::size_t idx = 0;
  std::int64_t l = cfg_.initial_momentum;
  std::int64_t clock = 0;
  std::int64_t T = 0;
  while (source.next(T)) {
    if (T > cfg_.horizon - clock) break;  // next collapse falls beyond the horizon
    const std::int64_t next_clock = clock + T;
    while (idx < n && times[idx] < next_clock) out[idx++] = l;
    if (T > 0) l += sampler_->sample(T, measurement.next());
    clock = next_clock;
  }
  while (idx < n) out[idx++] = l;
}

void TrajectoryRunner::run_wavefunction(std::uint64_t stream_id, std::span<std::int64_t> out) const {
  const std::uint64_t seed = derive_seed(cfg_.master_seed, stream_id);
  UniformStream schedule(seed, Lane::schedule);
  UniformStream measurement(seed, Lane::measurement);
  UniformStream observation(seed, Lane::observation);
  IntervalSource source(cfg_, schedule);

  const FloquetOperator& op = *floquet_;
  const auto window = static_cast<std::int64_t>(2 * op.headroom());
  const bool virtual_obs = cfg_.semantics == SampleSemantics::virtual_measurement;

  const auto& times = cfg_.sample_times;
  const std::size_t n = times.size();
  std::size_t idx = 0;
  std::int64_t l = cfg_.initial_momentum;
  std::int64_t clock = 0;
  WaveFunction psi = WaveFunction::eigenstate(l, window);

  // Records samples in [clock, until) while psi evolves from the collapse at `clock`.
  auto observe_until = [&](std::int64_t until, std::int64_t& evolved) {
    while (idx < n && times[idx] < until) {
      if (virtual_obs && times[idx] > clock) {
        op.evolve(psi, times[idx] - clock - evolved);
        evolved = times[idx] - clock;
        out[idx++] = sample_momentum(psi, observation.next()).momentum;
      } else {
        out[idx++] = l;
      }
    }
  };

  std::int64_t T = 0;
  bool finished = false;
  while (!finished && source.next(T)) {
    std::int64_t evolved = 0;
    if (T > cfg_.horizon - clock) {
      observe_until(cfg_.horizon + 1, evolved);
      finished = true;
      break;
    }
    const std::int64_t next_clock = clock + T;
    observe_until(next_clock, evolved);
    if (T > 0) {
      op.evolve(psi, T - evolved);
      const MeasurementOutcome o = sample_momentum(psi, measurement.next());
      l = o.momentum;
      psi = WaveFunction::eigenstate(l, window);
    }
    clock = next_clock;
  }
  if (!finished) {
    std::int64_t evolved = 0;
    observe_until(cfg_.horizon + 1, evolved);
  }
  while (idx < n) out[idx++] = l;
}

std::vector<std::int64_t> run_trajectory(const EnsembleConfig& cfg, std::uint64_t stream_id) {
  return TrajectoryRunner(cfg).run(stream_id);
}

// ---------------------------------------------------------------------------------------------

VarianceSeries summarize_samples(std::span<const std::int64_t> samples, std::span<const std::int64_t> times) {
  const std::size_t m = times.size();
  if (m == 0 || samples.size() % m != 0) throw DomainError("summarize_samples: shape mismatch");
  const std::size_t n = samples.size() / m;
  if (n < 2) throw ConfigError("summarize_samples: need at least 2 trajectories");

  VarianceSeries s;
  s.times.assign(times.begin(), times.end());
  s.variance.resize(m);
  s.standard_error.resize(m);
  s.n_effective = static_cast<std::int64_t>(n);
  const double dn = static_cast<double>(n);

  for (std::size_t c = 0; c < m; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += static_cast<double>(samples[i * m + c]);
    mean /= dn;
    double m2 = 0.0;
    double m4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(samples[i * m + c]) - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    m2 /= dn;
    m4 /= dn;
    s.variance[c] = m2;
    // Delta method: Var(mu2_hat) ~ (mu4 - mu2^2) / n.
    s.standard_error[c] = std::sqrt(std::max(0.0, m4 - m2 * m2) / dn);
  }
  return s;
}

EnsembleResult run_ensemble_detailed(const EnsembleConfig& cfg) {
  const TrajectoryRunner runner(cfg);
  const auto n = static_cast<std::size_t>(cfg.n_trajectories);
  const std::size_t m = cfg.sample_times.size();

  EnsembleResult r;
  r.n_times = m;
  r.samples.assign(n * m, 0);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (std::size_t i = next++; i < n; i = next++) {
        runner.run_into(i, std::span<std::int64_t>(r.samples).subspan(i * m, m));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };

  const auto workers = static_cast<std::size_t>(std::min<std::int64_t>(cfg.threads, cfg.n_trajectories));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  r.series = summarize_samples(r.samples, cfg.sample_times);
  return r;
}

VarianceSeries run_ensemble(const EnsembleConfig& cfg) { return run_ensemble_detailed(cfg).series; }

// ---------------------------------------------------------------------------------------------

double MomentumDistribution::probability(std::int64_t l) const {
  if (l < offset || l >= offset + static_cast<std::int64_t>(probabilities.size())) return 0.0;
  return probabilities[static_cast<std::size_t>(l - offset)];
}

double MomentumDistribution::mass() const {
  double s = 0.0;
  for (double p : probabilities) s += p;
  return s;
}

double MomentumDistribution::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i)
    s += static_cast<double>(offset + static_cast<std::int64_t>(i)) * probabilities[i];
  return s / mass();
}

double MomentumDistribution::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double d = static_cast<double>(offset + static_cast<std::int64_t>(i)) - mu;
    s += d * d * probabilities[i];
  }
  return s / mass();
}

namespace {

// Edge cells below this are dropped after each step.
constexpr double kTrimThreshold = 1e-40;
// Transform-path outputs below this fraction of the peak are round-off.
constexpr double kTransformNoiseFloor = 1e-15;

void clean_and_normalise(MomentumDistribution& P, bool transformed) {
  auto& p = P.probabilities;
  double peak = 0.0;
  for (double v : p) peak = std::max(peak, v);
  const double floor = transformed ? peak * kTransformNoiseFloor : 0.0;
  for (double& v : p)
    if (v < floor || v < 0.0) v = 0.0;

  std::size_t lo = 0;
  std::size_t hi = p.size();
  while (lo + 1 < hi && p[lo] < kTrimThreshold) ++lo;
  while (hi > lo + 1 && p[hi - 1] < kTrimThreshold) --hi;
  if (lo > 0 || hi < p.size()) {
    p = std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(lo), p.begin() + static_cast<std::ptrdiff_t>(hi));
    P.offset += static_cast<std::int64_t>(lo);
  }
  const double total = P.mass();
  if (!(total > 0.0)) throw NumericalError("master equation: distribution lost all mass");
  for (double& v : p) v /= total;
}

void step_three_point(MomentumDistribution& P, const ThreePointKernel& tp) {
  if (tp.k == 0) return;
  const auto k = static_cast<std::size_t>(tp.k);
  const std::size_t n = P.probabilities.size();
  std::vector<double> out(n + 2 * k, 0.0);
  const double half = 0.5 * tp.p;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = P.probabilities[i];
    out[i] += half * v;
    out[i + k] += (1.0 - tp.p) * v;
    out[i + 2 * k] += half * v;
  }
  P.probabilities = std::move(out);
  P.offset -= tp.k;
  clean_and_normalise(P, false);
}

void step_kernel(MomentumDistribution& P, const TransitionKernel& k) {
  const bool transformed = std::min(P.probabilities.size(), k.weights.size()) >= kDirectConvolutionLimit;
  P.probabilities = convolve(std::span<const double>(P.probabilities), std::span<const double>(k.weights));
  P.offset -= k.half_width;
  clean_and_normalise(P, transformed);
}

}  // namespace

MasterResult propagate_master(const MomentumDistribution& initial, const MeasurementSchedule& schedule, double kappa,
                              std::span<const std::int64_t> snapshot_times, KernelModel model) {
  if (initial.probabilities.empty()) throw DomainError("propagate_master: empty initial distribution");
  for (double p : initial.probabilities)
    if (!(p >= 0.0)) throw DomainError("propagate_master: negative probability");
  if (!model.is_synthetic() && !(kappa > 0.0)) throw DomainError("propagate_master: kappa must be > 0");

  MasterResult r;
  MomentumDistribution P = initial;
  std::int64_t clock = 0;
  std::size_t snap = 0;
  r.variance_after_interval.reserve(schedule.intervals.size());

  for (std::int64_t T : schedule.intervals) {
    const std::int64_t next_clock = clock + T;
    while (snap < snapshot_times.size() && snapshot_times[snap] < next_clock) {
      r.snapshots.push_back({snapshot_times[snap], P});
      ++snap;
    }
    if (T > 0) {
      if (model.is_synthetic()) {
        step_three_point(P, synthetic_three_point(model.beta, T));
      } else {
        step_kernel(P, build_kernel(kappa, T));
      }
    }
    clock = next_clock;
    r.variance_after_interval.push_back(P.variance());
  }
  while (snap < snapshot_times.size()) {
    r.snapshots.push_back({snapshot_times[snap], P});
    ++snap;
  }
  r.final_distribution = std::move(P);
  return r;
}

double schedule_variance(const MeasurementSchedule& schedule, double kappa, KernelModel model) {
  if (model.is_synthetic()) {
    double s = 0.0;
    for (std::int64_t T : schedule.intervals) s += synthetic_three_point(model.beta, T).variance();
    return s;
  }
  __int128 sum_sq = 0;
  for (std::int64_t T : schedule.intervals) sum_sq += static_cast<__int128>(T) * T;
  return 0.5 * kappa * kappa * static_cast<double>(sum_sq);
}

}  // namespace levy_rotor
