#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace loopsoup {

// SplitMix64 finalizer. Used both as the stream generator and as the
// key-mixing function for counter-based stream derivation.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable hash of a seed and an ordered list of integer keys.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t k : keys) h = mix64(h ^ (k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
  return h;
}

// Counter-based stream: a SplitMix64 sequence started from a derived key.
// Cheap to construct, so one stream per (replicate, site) or per loop is fine.
// Satisfies UniformRandomBitGenerator.
class Stream {
public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : state_(key) {}
  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) : state_(derive_seed(seed, keys)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1].
  double uniform_pos() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

}  // namespace loopsoup
