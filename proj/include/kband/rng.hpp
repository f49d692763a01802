#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace kband {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Deterministic, splittable random stream (xoshiro256++ seeded via splitmix64).
///
/// All sampling is implemented in the library so that a fixed seed produces
/// bit-identical draws on every run. `derive` creates an independent stream
/// from the construction seed, so substreams do not depend on how much the
/// parent has already consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1); safe as a log/Box-Muller argument.
  double open01() {
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform integer in {0, ..., n-1}, unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  /// Standard normal via Box-Muller (cosine branch only, stateless).
  double normal() {
    const double u1 = open01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent stream keyed on (construction seed, tag).
  Rng derive(std::uint64_t tag) const {
    std::uint64_t sm = seed_ ^ (0xD1B54A32D192ED03ULL * (tag + 1));
    const std::uint64_t mixed = detail::splitmix64(sm) ^ detail::splitmix64(sm);
    return Rng(mixed);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

}  // namespace kband
