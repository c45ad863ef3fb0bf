#pragma once

// Seeded random streams. Every trajectory owns its streams; stream i of a run is seeded by
// derive_seed(master_seed, i) so results do not depend on scheduling or thread count.

#include <cstdint>
#include <random>

namespace levy_rotor {

/// SplitMix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream_id` under `master`: splitmix64(master ^ splitmix64(stream_id)).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  return splitmix64(master ^ splitmix64(stream_id));
}

// Independent lanes inside one trajectory stream.
enum class Lane : std::uint64_t {
  schedule = 1,
  measurement = 2,
  observation = 3,
};

class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  UniformStream(std::uint64_t stream_seed, Lane lane)
      : engine_(splitmix64(stream_seed + static_cast<std::uint64_t>(lane) * 0xD1B54A32D192ED03ULL)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()() { return next(); }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace levy_rotor
