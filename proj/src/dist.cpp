#include "bfly/dist.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "bfly/error.hpp"

namespace bfly::dist {

void validate_weights(std::span<const double> weights) {
  if (weights.empty()) throw Error(ErrorCode::EmptyWeights, "weight vector has no entries");
  bool positive = false;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double w = weights[k];
    if (!std::isfinite(w) || w < 0.0)
      throw Error(ErrorCode::InvalidConfig, "weight " + std::to_string(k) + " is negative or not finite");
    positive = positive || w > 0.0;
  }
  if (!positive) throw Error(ErrorCode::AllZero, "all weights are zero");
}

PrefixTable build_prefix(std::span<const double> weights) {
  validate_weights(weights);
  PrefixTable t;
  t.p.resize(weights.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    sum += weights[k];
    t.p[k] = sum;
  }
  t.total = sum;
  return t;
}

std::size_t linear_search(const PrefixTable& table, double stop) {
  const std::size_t last = table.size() - 1;
  std::size_t j = 0;
  while (j < last && stop >= table.p[j]) ++j;
  return j;
}

std::size_t binary_search(const PrefixTable& table, double stop) {
  std::size_t j = 0;
  std::size_t k = table.size() - 1;
  while (j < k) {
    const std::size_t mid = (j + k) / 2;
    if (stop < table.p[mid]) {
      k = mid;
    } else {
      j = mid + 1;
    }
  }
  return j;
}

double stop_value(double total, double u) noexcept {
  const double stop = total * u;
  return stop < total ? stop : std::nextafter(total, 0.0);
}

float stop_value(float total, double u) noexcept {
  const auto stop = static_cast<float>(static_cast<double>(total) * u);
  return stop < total ? stop : std::nextafter(total, 0.0F);
}

std::size_t draw(const PrefixTable& table, RandomSource& rng) {
  if (!(table.total > 0.0)) throw Error(ErrorCode::AllZero, "prefix table total is zero");
  return binary_search(table, stop_value(table.total, rng.next_unit()));
}

AliasTable build_alias_vose(std::span<const double> weights) {
  validate_weights(weights);
  const std::size_t n = weights.size();
  const auto scale = static_cast<double>(n);

  // Work in units where the mean weight equals `total`; for integer weights
  // every intermediate stays an exactly representable integer.
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> scaled(n);
  std::vector<std::size_t> small;
  std::vector<std::size_t> large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    scaled[k] = weights[k] * scale;
    (scaled[k] < total ? small : large).push_back(k);
  }

  AliasTable t;
  t.threshold.assign(n, 1.0);
  t.alias.resize(n);
  for (std::size_t k = 0; k < n; ++k) t.alias[k] = k;

  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    large.pop_back();
    t.threshold[s] = scaled[s] / total;
    t.alias[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - total;
    (scaled[l] < total ? small : large).push_back(l);
  }
  // Leftovers on either list are full columns (rounding residue for reals).
  return t;
}

std::size_t alias_draw(const AliasTable& table, std::size_t column, double u) {
  return u < table.threshold[column] ? column : table.alias[column];
}

std::size_t alias_draw(const AliasTable& table, RandomSource& rng) {
  const std::size_t column = rng.next_below(table.size());
  return alias_draw(table, column, rng.next_unit());
}

std::size_t oracle_index(std::span<const double> weights, double stop) {
  validate_weights(weights);
  // Neumaier summation in long double; exact for integer weights below 2^64.
  long double sum = 0.0L;
  long double carry = 0.0L;
  const long double target = stop;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const long double w = weights[j];
    const long double t = sum + w;
    if (std::fabs(sum) >= std::fabs(w)) {
      carry += (sum - t) + w;
    } else {
      carry += (w - t) + sum;
    }
    sum = t;
    if (sum + carry > target) return j;
  }
  return weights.size() - 1;
}

std::vector<double> read_weights_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open weights file " + path.string());
  std::vector<double> weights;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value) || value < 0.0)
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": expected a non-negative decimal");
    weights.push_back(value);
  }
  return weights;
}

double tie_tolerance(double total) noexcept {
  return 4.0 * (std::nextafter(total, std::numeric_limits<double>::infinity()) - total);
}

bool near_boundary(std::span<const double> weights, double stop, double tolerance) {
  long double sum = 0.0L;
  for (double w : weights) {
    sum += w;
    if (std::fabs(static_cast<double>(sum) - stop) <= tolerance) return true;
  }
  return false;
}

}  // namespace bfly::dist
