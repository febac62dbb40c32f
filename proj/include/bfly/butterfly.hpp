#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "bfly/matrix.hpp"
#include "bfly/simt.hpp"

// Butterfly-patterned partial sums: the symbolic replacement schedule, the
// closed-form entry formula, and the lane programs that cache theta, build the
// butterfly table and search it.
namespace bfly {

/// Z(thread; lo..hi): the sum of one thread's theta-phi products over an
/// inclusive range of topics (block-local indices in symbolic use).
struct ZRef {
  int thread = 0;
  int lo = 0;
  int hi = 0;
  friend bool operator==(const ZRef&, const ZRef&) = default;
};

std::ostream& operator<<(std::ostream& out, const ZRef& z);

/// Sum of two adjacent ranges of the same thread; nullopt otherwise.
std::optional<ZRef> combine(const ZRef& a, const ZRef& b);

/// R[i,j;k,l]: the four entries at rows i<j and columns k<l.
struct Replacement {
  int row_i = 0;
  int row_j = 0;
  int col_k = 0;
  int col_l = 0;
  friend bool operator==(const Replacement&, const Replacement&) = default;
};

using ReplacementSet = std::vector<Replacement>;

/// log2(W) ordered sets; replacements inside a set are independent.
std::vector<ReplacementSet> replacement_schedule(int width);

template <class T>
struct Quad {
  T top_left, top_right, bottom_left, bottom_right;
  friend bool operator==(const Quad&, const Quad&) = default;
};

/// [a b; c d] -> [a d; a+b c+d]
template <class T>
Quad<T> replace_four(const T& a, const T& b, const T& c, const T& d) {
  return {a, d, a + b, c + d};
}

/// W x W grid of symbolic entries, indexed [row][column].
using ZGrid = std::vector<std::vector<ZRef>>;

/// Block contents before any replacement: row i, column j holds Z(i; j..j).
ZGrid transposed_products_grid(int width);

/// Applies one set in place. Throws InvalidConfig if a sum is not a single range.
void apply_replacements(ZGrid& grid, const ReplacementSet& set);

/// Snapshot of the grid after each set of replacement_schedule(width).
std::vector<ZGrid> replay_schedule(int width);

/// Closed form of the finished block entry at (row, column).
ZRef entry_zref(int row, int column, int width);

/// Direct sum for entry_zref over products[thread][block-local topic].
template <class Real>
double entry_oracle(int row, int column, int width, const Matrix<Real>& block_products) {
  const ZRef z = entry_zref(row, column, width);
  double sum = 0.0;
  for (int t = z.lo; t <= z.hi; ++t)
    sum += static_cast<double>(block_products(static_cast<std::size_t>(z.thread), static_cast<std::size_t>(t)));
  return sum;
}

/// Per-lane length-K partial-sum storage in the butterfly layout: the leading
/// K mod W rows are plain prefix sums, each W-row block holds butterfly
/// entries except its last row, which holds the running total.
template <class Real>
struct ButterflyTable {
  ButterflyTable(simt::Warp& warp, int topics)
      : p("p", warp.width(), static_cast<std::size_t>(topics), warp.local_space(), warp.config().elem_size),
        sum(warp.width()),
        topics(topics),
        width(warp.width()) {}

  simt::LocalArray<Real> p;
  simt::Lanes<Real> sum;
  int topics;
  int width;

  int remnant() const noexcept { return topics % width; }
  int blocks() const noexcept { return topics / width; }
  Real entry(int row, int lane) const { return p.at(lane, static_cast<std::size_t>(row)); }
};

/// theta_local[j] = theta[m, j] on the remnant, then block entries
/// theta_local[j+k] = theta[q*W + k, j + r] fetched W-consecutive per step.
template <class Real>
simt::LocalArray<Real> cache_theta_transposed(simt::Warp& warp, const simt::GlobalArray2D<Real>& theta,
                                              std::size_t group);

/// Per-lane row fetches (lane r reads theta[m, j]); for trace comparison only.
template <class Real>
simt::LocalArray<Real> cache_theta_naive(simt::Warp& warp, const simt::GlobalArray2D<Real>& theta,
                                         std::size_t group);

/// Local scratch of the transposed kernel.
template <class Real>
struct TransposedScratch {
  TransposedScratch(simt::Warp& warp, int topics);

  simt::LocalArray<int> c_warp;  // [owner k][index r]
  simt::LocalArray<Real> a;      // [owner m][index k]
  simt::LocalArray<Real> p;      // [owner m][topic]
};

/// Straight prefix sums via transposed phi reads and transposed (scattered)
/// reads of `a`. Returns the per-lane totals; the table lands in scratch.p.
template <class Real>
simt::Lanes<Real> compute_partial_sums_transposed(simt::Warp& warp, const simt::LocalArray<Real>& theta_local,
                                                  const simt::GlobalArray2D<Real>& phi,
                                                  const simt::Lanes<int>& words, TransposedScratch<Real>& scratch);

template <class Real>
void build_butterfly_table(simt::Warp& warp, const simt::LocalArray<Real>& theta_local,
                           const simt::GlobalArray2D<Real>& phi, const simt::Lanes<int>& words,
                           ButterflyTable<Real>& table);

/// Per-lane state of the in-block walk.
struct SearchState {
  double low = 0.0;
  double high = 0.0;
  int flip = 0;
  int block_base = 0;
};

/// Called after each level of the in-block walk with every lane's state.
using SearchObserver = std::function<void(int level, const simt::Lanes<SearchState>& state)>;

/// Smallest j with straight-prefix(j) > stop for every lane. Requires
/// 0 <= stop < sum on lanes with a positive total (stop == 0 otherwise).
template <class Real>
simt::Lanes<int> butterfly_search(simt::Warp& warp, const ButterflyTable<Real>& table,
                                  const simt::Lanes<Real>& stop, const SearchObserver* observer = nullptr);

/// Lockstep binary search of each lane's own straight prefix table.
template <class Real>
simt::Lanes<int> lockstep_binary_search(simt::Warp& warp, const simt::LocalArray<Real>& prefix, int topics,
                                        const simt::Lanes<Real>& stop);

/// Builds a butterfly table whose lane r products are row r of `products`
/// (W x K), by caching them as theta against an all-ones phi.
template <class Real>
ButterflyTable<Real> butterfly_table_from_products(simt::Warp& warp, const Matrix<Real>& products,
                                                   simt::GlobalLayout layout = simt::GlobalLayout::dense);

}  // namespace bfly
