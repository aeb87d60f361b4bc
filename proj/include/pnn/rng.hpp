#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace pnn {

// 64-bit avalanche finalizer from splitmix64 (Steele, Lea & Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based splitmix64 generator. Every draw hashes an incrementing
// counter, so a stream's i-th output depends only on (seed, i). Substreams
// derived via substream(seed, index) are decorrelated by the same hash,
// which keeps per-task data independent of how many tasks are generated
// and of the order they are generated in.
//
// Uniform variates use the top 53 bits; normals use Box-Muller (two draws
// per call, no caching) so the stdlib's unspecified distribution algorithms
// never enter the reproducibility story.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return mix64(state_ += 0x9E3779B97F4A7C15ull); }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; first factor uses a (0,1] uniform so the
  // log never sees zero.
  double normal() {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform in [0, n). Modulo bias is ~n/2^64, irrelevant at our sizes.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(mix64(seed ^ mix64(index + 0x9E3779B97F4A7C15ull)));
}

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace pnn
