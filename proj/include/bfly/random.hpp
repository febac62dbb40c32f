#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace bfly {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Mixes an arbitrary list of 64-bit keys into one well-distributed word.
std::uint64_t hash_keys(std::initializer_list<std::uint64_t> keys) noexcept;

/// xoshiro256** (Blackman & Vigna), seeded through splitmix64.
///
/// Satisfies UniformRandomBitGenerator so it can drive the <random>
/// distributions. Instances are single-owner.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed = 0) noexcept;

  /// Independent stream for a tuple of keys, e.g. (seed, warp, lane, step).
  static RandomSource derive(std::initializer_list<std::uint64_t> keys) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }
  std::uint64_t next_u64() noexcept;

  /// Uniform real in [0,1) with 53 random bits; never returns 1.0.
  double next_unit() noexcept;

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t s_[4];
};

/// Maps the top 53 bits of a word onto [0,1).
constexpr double unit_from_bits(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace bfly
