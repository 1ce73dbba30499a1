#pragma once

// Deterministic randomness utilities.
//
// Two sources are used throughout the library:
//  - Xoshiro256++ streams (Blackman & Vigna) for sequential draws, and
//  - stateless SplitMix64 hashing for per-record draws that must not depend
//    on evaluation order (safe to shard across threads).
// Both are fully specified algorithms seeded from a single 64-bit value, so
// identical seeds reproduce identical results on every platform. Distribution
// transforms are implemented here rather than taken from <random>, whose
// distributions are not bit-portable across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace shapegd::rng {

// SplitMix64, the reference seeding generator of Steele/Lea/Flood.
inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64(s);
}

// Order-independent combination of seed material.
inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix(a, b) ^ c);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Maps 64 random bits onto [0,1) with 53-bit resolution.
inline constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Maps 64 random bits onto (0,1]; safe as a log() argument.
inline constexpr double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Single standard-normal deviate from one hash value (Box-Muller, first
// branch only so the result is a pure function of `bits`).
inline double normal_from_bits(std::uint64_t bits) {
  const double u1 = to_unit_open(mix64(bits ^ 0x5bf0f1e4a3c6d2b9ULL));
  const double u2 = to_unit(mix64(bits ^ 0x94d049bb133111ebULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Xoshiro256++ stream generator.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform01() { return to_unit(next()); }

  // Uniform over [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t below(std::uint64_t n) { return next() % n; }

  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = to_unit_open(next());
    const double u2 = to_unit(next());
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential(double rate) { return -std::log(to_unit_open(next())) / rate; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace shapegd::rng
