#include "bfly/random.hpp"

#include <bit>

namespace bfly {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_keys(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t state = 0x6a09e667f3bcc909ULL;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t key : keys) {
    state ^= key + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h = splitmix64(state);
  }
  return h;
}

RandomSource::RandomSource(std::uint64_t seed) noexcept {
  std::uint64_t state = seed;
  for (auto& word : s_) word = splitmix64(state);
}

RandomSource RandomSource::derive(std::initializer_list<std::uint64_t> keys) noexcept {
  return RandomSource(hash_keys(keys));
}

std::uint64_t RandomSource::next_u64() noexcept {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double RandomSource::next_unit() noexcept { return unit_from_bits(next_u64()); }

std::uint64_t RandomSource::next_below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection of the biased low range.
  unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

}  // namespace bfly
