#include "doctest.h"

#include <random>
#include <set>
#include <vector>

#include "bfly/random.hpp"

using namespace bfly;

TEST_CASE("streams are reproducible and distinct") {
  RandomSource a(42);
  RandomSource b(42);
  RandomSource c(43);
  std::vector<std::uint64_t> xa;
  std::vector<std::uint64_t> xc;
  for (int n = 0; n < 100; ++n) {
    xa.push_back(a());
    CHECK(b() == xa.back());
    xc.push_back(c());
  }
  CHECK(xa != xc);

  auto d1 = RandomSource::derive({1, 2, 3});
  auto d2 = RandomSource::derive({1, 2, 3});
  auto d3 = RandomSource::derive({1, 3, 2});
  CHECK(d1() == d2());
  CHECK(hash_keys({1, 2, 3}) != hash_keys({1, 3, 2}));
  CHECK(hash_keys({0}) != hash_keys({0, 0}));
  (void)d3;
}

TEST_CASE("splitmix64 reference values") {
  // Published reference outputs for seed 1234567.
  std::uint64_t state = 1234567;
  CHECK(splitmix64(state) == 6457827717110365317ULL);
  CHECK(splitmix64(state) == 3203168211198807973ULL);
  CHECK(splitmix64(state) == 9817491932198370423ULL);
}

TEST_CASE("unit and bounded draws stay in range") {
  RandomSource rng(5);
  double lo = 1.0;
  double hi = 0.0;
  std::vector<int> bins(7);
  for (int n = 0; n < 70000; ++n) {
    const double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    const auto k = rng.next_below(7);
    REQUIRE(k < 7);
    ++bins[k];
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
  for (const int b : bins) CHECK(std::abs(b - 10000) < 600);
  CHECK(unit_from_bits(~0ULL) < 1.0);
  CHECK(unit_from_bits(0) == 0.0);

  // usable as a standard URBG
  std::uniform_int_distribution<int> dist(0, 3);
  std::set<int> seen;
  for (int n = 0; n < 100; ++n) seen.insert(dist(rng));
  CHECK(seen.size() == 4);
}
