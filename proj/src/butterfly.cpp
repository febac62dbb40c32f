#include "bfly/butterfly.hpp"

#include <string>

#include "bfly/error.hpp"

namespace bfly {

using simt::GlobalArray2D;
using simt::Lanes;
using simt::LocalArray;
using simt::Phase;
using simt::PhaseScope;
using simt::Warp;

std::ostream& operator<<(std::ostream& out, const ZRef& z) {
  return out << "Z" << z.thread << "[" << z.lo << ":" << z.hi << "]";
}

std::optional<ZRef> combine(const ZRef& a, const ZRef& b) {
  if (a.thread != b.thread) return std::nullopt;
  if (a.hi + 1 == b.lo) return ZRef{a.thread, a.lo, b.hi};
  if (b.hi + 1 == a.lo) return ZRef{a.thread, b.lo, a.hi};
  return std::nullopt;
}

std::vector<ReplacementSet> replacement_schedule(int width) {
  simt::WarpConfig{width, 4, 128}.validate();
  std::vector<ReplacementSet> sets;
  for (int bit = 1; bit < width; bit *= 2) {
    ReplacementSet set;
    for (int i = 0; i < width / (2 * bit); ++i) {
      const int d = 2 * bit * i + (bit - 1);
      for (int k = 0; k < width; ++k)
        if ((k & bit) == 0) set.push_back({d, d + bit, k, k ^ bit});
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

ZGrid transposed_products_grid(int width) {
  ZGrid grid(static_cast<std::size_t>(width), std::vector<ZRef>(static_cast<std::size_t>(width)));
  for (int i = 0; i < width; ++i)
    for (int j = 0; j < width; ++j) grid[i][j] = ZRef{i, j, j};
  return grid;
}

void apply_replacements(ZGrid& grid, const ReplacementSet& set) {
  for (const Replacement& rep : set) {
    const ZRef a = grid[rep.row_i][rep.col_k];
    const ZRef b = grid[rep.row_i][rep.col_l];
    const ZRef c = grid[rep.row_j][rep.col_k];
    const ZRef d = grid[rep.row_j][rep.col_l];
    const auto ab = combine(a, b);
    const auto cd = combine(c, d);
    if (!ab || !cd)
      throw Error(ErrorCode::InvalidConfig, "replacement at rows " + std::to_string(rep.row_i) + "," +
                                                std::to_string(rep.row_j) + " sums non-adjacent ranges");
    grid[rep.row_i][rep.col_k] = a;
    grid[rep.row_i][rep.col_l] = d;
    grid[rep.row_j][rep.col_k] = *ab;
    grid[rep.row_j][rep.col_l] = *cd;
  }
}

std::vector<ZGrid> replay_schedule(int width) {
  ZGrid grid = transposed_products_grid(width);
  std::vector<ZGrid> snapshots;
  for (const auto& set : replacement_schedule(width)) {
    apply_replacements(grid, set);
    snapshots.push_back(grid);
  }
  return snapshots;
}

ZRef entry_zref(int row, int column, int width) {
  (void)width;
  const int m = row ^ (row + 1);
  const int k = m / 2;
  const int u = (row & ~m) + (column & m);
  const int v = column & ~k;
  return ZRef{u, v, v + k};
}

// -- lane programs ----------------------------------------------------------

namespace {

Lanes<int> uniform(int width, int value) { return Lanes<int>(width, value); }

simt::LaneMask mask_of(const Lanes<bool>& pred) {
  simt::LaneMask mask = 0;
  for (int r = 0; r < pred.width(); ++r)
    if (pred[r]) mask |= simt::LaneMask{1} << r;
  return mask;
}

}  // namespace

template <class Real>
LocalArray<Real> cache_theta_transposed(Warp& warp, const GlobalArray2D<Real>& theta, std::size_t group) {
  const int w = warp.width();
  const int topics = static_cast<int>(theta.cols());
  const int remnant = topics % w;
  const int first_doc = static_cast<int>(group) * w;
  LocalArray<Real> local("theta_local", w, theta.cols(), warp.local_space(), warp.config().elem_size);

  int j = 0;
  {
    PhaseScope scope(warp, Phase::cache_remnant);
    const auto own_row = simt::lanewise<int>(w, [&](int r) { return first_doc + r; });
    for (; j < remnant; ++j) warp.store(local, j, warp.load(theta, own_row, uniform(w, j)));
  }
  PhaseScope scope(warp, Phase::cache_block);
  for (; j < topics; j += w) {
    const auto cols = simt::lanewise<int>(w, [&](int r) { return j + r; });
    for (int k = 0; k < w; ++k) warp.store(local, j + k, warp.load(theta, uniform(w, first_doc + k), cols));
  }
  return local;
}

template <class Real>
LocalArray<Real> cache_theta_naive(Warp& warp, const GlobalArray2D<Real>& theta, std::size_t group) {
  const int w = warp.width();
  const int topics = static_cast<int>(theta.cols());
  const int remnant = topics % w;
  LocalArray<Real> local("theta_local", w, theta.cols(), warp.local_space(), warp.config().elem_size);
  const auto own_row = simt::lanewise<int>(w, [&](int r) { return static_cast<int>(group) * w + r; });
  for (int j = 0; j < topics; ++j) {
    PhaseScope scope(warp, j < remnant ? Phase::cache_remnant : Phase::cache_block);
    warp.store(local, j, warp.load(theta, own_row, uniform(w, j)));
  }
  return local;
}

template <class Real>
TransposedScratch<Real>::TransposedScratch(Warp& warp, int topics)
    : c_warp("c_warp", warp.width(), static_cast<std::size_t>(warp.width()), warp.local_space(),
             warp.config().elem_size),
      a("a", warp.width(), static_cast<std::size_t>(warp.width()), warp.local_space(), warp.config().elem_size),
      p("p", warp.width(), static_cast<std::size_t>(topics), warp.local_space(), warp.config().elem_size) {}

template <class Real>
Lanes<Real> compute_partial_sums_transposed(Warp& warp, const LocalArray<Real>& theta_local,
                                            const GlobalArray2D<Real>& phi, const Lanes<int>& words,
                                            TransposedScratch<Real>& s) {
  PhaseScope scope(warp, Phase::build);
  const int w = warp.width();
  const int topics = static_cast<int>(s.p.length());
  const int remnant = topics % w;
  const auto lane = warp.lane_ids();

  // Lane r publishes its word into c_warp[k, r] for every k.
  for (int k = 0; k < w; ++k) warp.store(s.c_warp, uniform(w, k), lane, words);

  Lanes<Real> sum(w, Real{0});
  int j = 0;
  for (; j < remnant; ++j) {
    const auto product = warp.mul(warp.load(theta_local, j), warp.load(phi, words, uniform(w, j)));
    sum = warp.add(sum, product);
    warp.store(s.p, j, sum);
  }
  for (; j < topics; j += w) {
    const auto cols = simt::lanewise<int>(w, [&](int r) { return j + r; });
    for (int k = 0; k < w; ++k) {
      const auto word_k = warp.load(s.c_warp, lane, uniform(w, k));
      warp.store(s.a, k, warp.mul(warp.load(theta_local, j + k), warp.load(phi, word_k, cols)));
    }
    for (int k = 0; k < w; ++k) {
      // a[q*W + k, r]: lane r reads lane k's row, stride W apart.
      sum = warp.add(sum, warp.load(s.a, uniform(w, k), lane));
      warp.store(s.p, j + k, sum);
    }
  }
  return sum;
}

template <class Real>
void build_butterfly_table(Warp& warp, const LocalArray<Real>& theta_local, const GlobalArray2D<Real>& phi,
                           const Lanes<int>& words, ButterflyTable<Real>& table) {
  PhaseScope scope(warp, Phase::build);
  const int w = warp.width();
  const int topics = table.topics;
  const int remnant = table.remnant();

  simt::RegisterArray<int> c_warp(w, static_cast<std::size_t>(w));
  for (int k = 0; k < w; ++k) c_warp[static_cast<std::size_t>(k)] = warp.shuffle(words, k);

  Lanes<Real> sum(w, Real{0});
  int j = 0;
  for (; j < remnant; ++j) {
    const auto product = warp.mul(warp.load(theta_local, j), warp.load(phi, words, uniform(w, j)));
    sum = warp.add(sum, product);
    warp.store(table.p, j, sum);
  }

  simt::RegisterArray<Real> a(w, static_cast<std::size_t>(w));
  for (; j < topics; j += w) {
    const auto cols = simt::lanewise<int>(w, [&](int r) { return j + r; });
    // a[k] on lane r: product for thread k, topic j + r.
    for (int k = 0; k < w; ++k)
      a[static_cast<std::size_t>(k)] =
          warp.mul(warp.load(theta_local, j + k), warp.load(phi, c_warp[static_cast<std::size_t>(k)], cols));

    for (int bit = 1; bit < w; bit *= 2) {
      for (int i = 0; i < w / (2 * bit); ++i) {
        const auto d = static_cast<std::size_t>(2 * bit * i + (bit - 1));
        const auto e = d + static_cast<std::size_t>(bit);
        const auto h = simt::lanewise<Real>(w, [&](int r) { return (r & bit) != 0 ? a[d][r] : a[e][r]; });
        const auto v = warp.shuffle_xor(h, bit);
        for (int r = 0; r < w; ++r)
          if ((r & bit) != 0) a[d][r] = a[e][r];
        a[e] = warp.add(a[d], v);
        warp.store(table.p, j + static_cast<int>(d), a[d]);
      }
    }
    sum = warp.add(sum, a[static_cast<std::size_t>(w - 1)]);
    warp.store(table.p, j + (w - 1), sum);
  }
  table.sum = sum;
}

template <class Real>
Lanes<int> butterfly_search(Warp& warp, const ButterflyTable<Real>& table, const Lanes<Real>& stop,
                            const SearchObserver* observer) {
  PhaseScope scope(warp, Phase::search);
  const int w = warp.width();
  const int topics = table.topics;
  const int remnant = table.remnant();
  const int log_w = warp.config().log2_width();

  for (int r = 0; r < w; ++r) {
    if (!warp.is_active(r)) continue;
    const bool ok = table.sum[r] > Real{0} ? (stop[r] >= Real{0} && stop[r] < table.sum[r]) : stop[r] == Real{0};
    if (!ok)
      throw Error(ErrorCode::StopOutOfRange, "stop " + std::to_string(static_cast<double>(stop[r])) + " on lane " +
                                                 std::to_string(r) + " outside [0, " +
                                                 std::to_string(static_cast<double>(table.sum[r])) + ")");
  }

  // Binary search over the last row of each block to pick a block.
  const int search_base = remnant + (w - 1);
  Lanes<int> lo(w, 0);
  Lanes<int> hi(w, topics / w - 1);
  while (true) {
    const auto live = simt::lanewise<bool>(w, [&](int r) { return lo[r] < hi[r]; });
    if (!warp.any(live)) break;
    simt::Predicate pred(warp, mask_of(live));
    const auto mid = simt::lanewise<int>(w, [&](int r) { return (lo[r] + hi[r]) / 2; });
    const auto probe = warp.load(table.p, simt::lanewise<int>(w, [&](int r) { return mid[r] * w + search_base; }));
    for (int r = 0; r < w; ++r) {
      if (!live[r]) continue;
      if (stop[r] < probe[r]) {
        hi[r] = mid[r];
      } else {
        lo[r] = mid[r] + 1;
      }
    }
  }
  const auto block_base = simt::lanewise<int>(w, [&](int r) { return remnant + lo[r] * w; });
  const auto has_prior = simt::lanewise<bool>(w, [&](int r) { return block_base[r] > 0; });
  const auto prior_index = simt::lanewise<int>(w, [&](int r) { return block_base[r] - 1; });

  Lanes<int> result = block_base;
  if (topics >= w) {
    Lanes<Real> low(w, Real{0});
    {
      simt::Predicate pred(warp, mask_of(has_prior));
      const auto before = warp.load(table.p, prior_index);
      for (int r = 0; r < w; ++r)
        if (has_prior[r]) low[r] = before[r];
    }
    auto high = warp.load(table.p, simt::lanewise<int>(w, [&](int r) { return block_base[r] + (w - 1); }));
    Lanes<int> flip(w, 0);

    for (int b = 0; b < log_w; ++b) {
      const int bit = 1 << ((log_w - 1) - b);
      const int mask = ((w - 1) * (2 * bit)) & (w - 1);
      Lanes<Real> y(w, Real{0});
      for (int i = 0; i < w / (2 * bit); ++i) {
        const int d = (bit - 1) + 2 * bit * i;
        const auto him = simt::lanewise<int>(w, [&](int r) { return (d & mask) + (r & ~mask); });
        const auto his_block_base = warp.shuffle(block_base, him);
        const auto mine = warp.load(table.p, simt::lanewise<int>(w, [&](int r) { return his_block_base[r] + d; }));
        const auto t = warp.shuffle_xor(mine, flip);
        for (int r = 0; r < w; ++r)
          if (((r ^ d) & mask) == 0) y[r] = t[r];
      }
      // One add-or-subtract per lane.
      const auto compare = simt::lanewise<Real>(w, [&](int r) {
        return (r & bit) != 0 ? static_cast<Real>(high[r] - y[r]) : static_cast<Real>(low[r] + y[r]);
      });
      if (warp.trace()) ++warp.trace()->ops(Phase::search).adds;
      for (int r = 0; r < w; ++r) {
        if (stop[r] < compare[r]) {
          high[r] = compare[r];
          flip[r] ^= bit & r;
        } else {
          low[r] = compare[r];
          flip[r] ^= bit & ~r;
        }
      }
      if (observer) {
        const auto state = simt::lanewise<SearchState>(w, [&](int r) {
          return SearchState{static_cast<double>(low[r]), static_cast<double>(high[r]), flip[r], block_base[r]};
        });
        (*observer)(b, state);
      }
    }
    result = simt::lanewise<int>(w, [&](int r) { return block_base[r] + (flip[r] ^ r); });
  }

  // stop may fall before the selected block; fall back to the remnant.
  Lanes<bool> in_remnant(w, false);
  {
    simt::Predicate pred(warp, mask_of(has_prior));
    const auto before = warp.load(table.p, prior_index);
    for (int r = 0; r < w; ++r) in_remnant[r] = has_prior[r] && warp.is_active(r) && stop[r] < before[r];
  }
  if (warp.any(in_remnant)) {
    Lanes<bool> searching = in_remnant;
    for (int i = 0; i < remnant && warp.any(searching); ++i) {
      simt::Predicate pred(warp, mask_of(searching));
      const auto value = warp.load(table.p, i);
      for (int r = 0; r < w; ++r) {
        if (searching[r] && stop[r] < value[r]) {
          result[r] = i;
          searching[r] = false;
        }
      }
    }
  }
  return result;
}

template <class Real>
Lanes<int> lockstep_binary_search(Warp& warp, const LocalArray<Real>& prefix, int topics, const Lanes<Real>& stop) {
  PhaseScope scope(warp, Phase::search);
  const int w = warp.width();
  Lanes<int> lo(w, 0);
  Lanes<int> hi(w, topics - 1);
  while (true) {
    const auto live = simt::lanewise<bool>(w, [&](int r) { return lo[r] < hi[r]; });
    if (!warp.any(live)) break;
    simt::Predicate pred(warp, mask_of(live));
    const auto mid = simt::lanewise<int>(w, [&](int r) { return (lo[r] + hi[r]) / 2; });
    const auto probe = warp.load(prefix, mid);
    for (int r = 0; r < w; ++r) {
      if (!live[r]) continue;
      if (stop[r] < probe[r]) {
        hi[r] = mid[r];
      } else {
        lo[r] = mid[r] + 1;
      }
    }
  }
  return lo;
}

template <class Real>
ButterflyTable<Real> butterfly_table_from_products(Warp& warp, const Matrix<Real>& products,
                                                   simt::GlobalLayout layout) {
  const int w = warp.width();
  if (products.rows() != static_cast<std::size_t>(w))
    throw Error(ErrorCode::InvalidConfig, "product matrix needs one row per lane");
  simt::AddressSpace global(warp.config().line_size);
  const GlobalArray2D<Real> theta("theta", products, global, warp.config(), layout);
  const GlobalArray2D<Real> phi("phi", Matrix<Real>(1, products.cols(), Real{1}), global, warp.config(), layout);
  const auto theta_local = cache_theta_transposed(warp, theta, 0);
  ButterflyTable<Real> table(warp, static_cast<int>(products.cols()));
  build_butterfly_table(warp, theta_local, phi, Lanes<int>(w, 0), table);
  return table;
}

#define BFLY_INSTANTIATE(Real)                                                                                    \
  template LocalArray<Real> cache_theta_transposed(Warp&, const GlobalArray2D<Real>&, std::size_t);              \
  template LocalArray<Real> cache_theta_naive(Warp&, const GlobalArray2D<Real>&, std::size_t);                   \
  template struct TransposedScratch<Real>;                                                                        \
  template Lanes<Real> compute_partial_sums_transposed(Warp&, const LocalArray<Real>&, const GlobalArray2D<Real>&, \
                                                       const Lanes<int>&, TransposedScratch<Real>&);              \
  template void build_butterfly_table(Warp&, const LocalArray<Real>&, const GlobalArray2D<Real>&,                 \
                                      const Lanes<int>&, ButterflyTable<Real>&);                                  \
  template Lanes<int> butterfly_search(Warp&, const ButterflyTable<Real>&, const Lanes<Real>&,                    \
                                       const SearchObserver*);                                                    \
  template Lanes<int> lockstep_binary_search(Warp&, const LocalArray<Real>&, int, const Lanes<Real>&);            \
  template ButterflyTable<Real> butterfly_table_from_products(Warp&, const Matrix<Real>&, simt::GlobalLayout);

BFLY_INSTANTIATE(float)
BFLY_INSTANTIATE(double)

#undef BFLY_INSTANTIATE

}  // namespace bfly
