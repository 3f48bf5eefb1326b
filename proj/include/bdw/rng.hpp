#pragma once
// Deterministic counter-based random numbers.
//
// Every random quantity in the workbench is a pure function of a 64-bit seed
// and one or two counters (splitmix64 finalizer over a mixed key). This gives
// exact replay of oracle noise streams at any query index and makes parallel
// loops bit-identical to their serial counterparts regardless of scheduling.

#include <cstdint>
#include <cmath>
#include <vector>

namespace bdw {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + kGolden + (a << 6) + (a >> 2)));
}
inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_mix(hash_mix(a, b), c);
}
inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                              std::uint64_t d) {
  return hash_mix(hash_mix(a, b, c), d);
}

// Uniform strictly inside (0,1): (k + 0.5) * 2^-52 over 52 high bits. Every
// value is exactly representable, so neither endpoint can appear by rounding
// (53-bit variants round their top value up to 1.0) and log() stays finite.
inline double u64_to_unit(std::uint64_t x) {
  return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

// Pure-function draws addressed by (seed, counter, element).
inline double uniform_at(std::uint64_t seed, std::uint64_t ctr, std::uint64_t elem) {
  return u64_to_unit(hash_mix(seed, ctr, elem));
}

// Box-Muller; each normal consumes elements (2e, 2e+1) of the (seed, ctr) slot.
inline double normal_at(std::uint64_t seed, std::uint64_t ctr, std::uint64_t elem) {
  double u1 = uniform_at(seed, ctr, 2 * elem);
  double u2 = uniform_at(seed, ctr, 2 * elem + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

// Sequential stream for attack-side randomness (one consumer, ordered draws).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return hash_mix(seed_, ctr_++, 0); }
  double uniform() { return u64_to_unit(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    std::uint64_t c = ctr_++;
    return normal_at(seed_, c, 0);
  }
  // Index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }
  std::vector<double> normal_vec(std::size_t n) {
    std::vector<double> v(n);
    std::uint64_t c = ctr_++;
    for (std::size_t i = 0; i < n; ++i) v[i] = normal_at(seed_, c, i);
    return v;
  }
  template <class T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t ctr_ = 0;
};

}  // namespace bdw
