#pragma once

#include <cstdint>

namespace mosp {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used as a counter-based
// generator: out = mix(mix(mix(seed) ^ stream) + index). Every draw is
// addressed by (seed, stream, index), so extending the horizon or adding a
// parameter family never perturbs earlier draws.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent substreams, one per parameter family.
enum class RngStream : std::uint64_t {
  kLinkCaps = 1,
  kDcCapacity = 2,
  kPrices = 3,
  kLoads = 4,
  kReseed = 5,
  kTest = 100,
};

/// Stateless counter-based uniform generator.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream)
      : key_(splitmix64(splitmix64(seed) ^
                        (static_cast<std::uint64_t>(stream) * 0xD6E8FEB86659FD93ULL))) {}

  std::uint64_t bits(std::uint64_t index) const { return splitmix64(key_ + index); }

  /// Uniform on [0,1) with 53-bit resolution.
  double unit(std::uint64_t index) const {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t index, double lo, double hi) const {
    return lo + unit(index) * (hi - lo);
  }

 private:
  std::uint64_t key_;
};

/// Deterministic child seed for instance re-generation.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t attempt) {
  return CounterRng(seed, RngStream::kReseed).bits(attempt);
}

}  // namespace mosp
