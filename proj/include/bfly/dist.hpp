#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "bfly/random.hpp"

// Single-lane discrete-distribution machinery: prefix tables, the two
// classic searches, the alias baseline and a high-precision oracle.
namespace bfly::dist {

/// Running sums of a weight vector, accumulated left to right.
struct PrefixTable {
  std::vector<double> p;
  double total = 0.0;

  std::size_t size() const noexcept { return p.size(); }
};

struct AliasTable {
  std::vector<double> threshold;      // F
  std::vector<std::size_t> alias;     // A

  std::size_t size() const noexcept { return threshold.size(); }
};

/// Throws EmptyWeights, AllZero, or InvalidConfig (negative / non-finite entry).
void validate_weights(std::span<const double> weights);

PrefixTable build_prefix(std::span<const double> weights);

// Both searches return the smallest j with p[j] > stop, or K-1 when no entry
// exceeds stop.
std::size_t linear_search(const PrefixTable& table, double stop);
std::size_t binary_search(const PrefixTable& table, double stop);

/// stop = total * u, pulled strictly below total when rounding lands on it.
double stop_value(double total, double u) noexcept;
float stop_value(float total, double u) noexcept;

std::size_t draw(const PrefixTable& table, RandomSource& rng);

/// Vose's linear-time construction. Entries whose scaled weight equals the
/// mean go on the "large" worklist.
AliasTable build_alias_vose(std::span<const double> weights);

std::size_t alias_draw(const AliasTable& table, std::size_t column, double u);
std::size_t alias_draw(const AliasTable& table, RandomSource& rng);

/// Smallest j with sum(weights[0..j]) > stop using compensated long double
/// accumulation; K-1 when stop reaches the total.
std::size_t oracle_index(std::span<const double> weights, double stop);

/// One non-negative decimal per line. Blank lines are ignored.
std::vector<double> read_weights_file(const std::filesystem::path& path);

/// Width of the tie band around a prefix boundary: four ulps of the total.
double tie_tolerance(double total) noexcept;

/// True when stop lies within `tolerance` of some running sum of weights,
/// i.e. a draw whose outcome legitimately depends on summation order.
bool near_boundary(std::span<const double> weights, double stop, double tolerance);

}  // namespace bfly::dist
