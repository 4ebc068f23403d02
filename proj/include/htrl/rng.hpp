#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace htrl {

/// SplitMix64 finalizer. Used both as a counter-based generator (hash of
/// seed/stream/counter) and as the state transition of Rng.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random words: word(stream, counter) depends only on its
/// arguments, so batches can be generated in any order or on any worker.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(mix64(seed)) {}

  [[nodiscard]] constexpr std::uint64_t word(std::uint64_t stream,
                                             std::uint64_t counter) const noexcept {
    return mix64(seed_ ^ mix64(stream * 0xd1b54a32d192ed03ULL + counter));
  }

 private:
  std::uint64_t seed_;
};

/// Small sequential generator with platform-independent distributions
/// (the std:: distributions are implementation-defined).
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform(std::uint64_t n) noexcept {
    // Rejection keeps the result exactly uniform.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  /// Uniform double in [0, 1).
  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() noexcept {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child generator for a sub-component.
  Rng split() noexcept { return Rng(mix64(next())); }

 private:
  std::uint64_t state_;
};

}  // namespace htrl
