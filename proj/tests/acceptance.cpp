// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
// Expected values come from the oracles below, never from the library paths
// under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bfly/bench.hpp"
#include "bfly/butterfly.hpp"
#include "bfly/dist.hpp"
#include "bfly/kernels.hpp"
#include "bfly/lda.hpp"
#include "bfly/random.hpp"
#include "oracles.hpp"

namespace {

using namespace bfly;
using simt::Lanes;

// Tolerances.
const double kClosureRel = std::ldexp(1.0, -40);
constexpr double kTieBandRel = 1e-12;        // stop within this of a boundary counts as a tie
constexpr double kSearchAgreement = 0.999;
constexpr double kChi2Critical = 42.312;     // chi2 upper 0.001 point, 18 dof (standard tables)
constexpr double kAriMin = 0.9;
constexpr double kLoglikRel = 0.01;

struct Outcome {
  bool passed = true;
  std::string detail;
};

std::size_t at(int i) { return static_cast<std::size_t>(i); }

// ---------------------------------------------------------------------------
// Closed form of a finished block entry, row < W-1:
// m = i xor (i+1), k = m/2, thread (i & ~m) + (j & m), topics (j & ~k) .. (j & ~k) + k.
struct Range {
  int thread, lo, hi;
};

Range closed_form(int i, int j) {
  const int m = i ^ (i + 1);
  const int k = m >> 1;
  const int lo = j & ~k;
  return {(i & ~m) + (j & m), lo, lo + k};
}

Outcome criterion_closure() {
  Outcome o;
  std::uint64_t compared = 0;
  std::uint64_t failures = 0;
  double worst = 0.0;
  RandomSource rng(0xacc1);
  for (const int w : {2, 4, 8, 16, 32}) {
    const int k = 3 * w - 1;  // a remnant of W-1 rows and two blocks
    const int rem = k % w;
    for (int trial = 0; trial < 100; ++trial) {
      Matrix<double> prod(at(w), at(k));
      for (auto& x : prod.data()) x = rng.next_unit();
      simt::Warp warp(simt::WarpConfig{w, 8, 128});
      const auto table = butterfly_table_from_products(warp, prod, simt::GlobalLayout::block_aligned);
      for (int r = 0; r < w; ++r) {
        double seq = 0.0;
        long double straight = 0.0L;
        for (int t = 0; t < k; ++t) {
          seq += prod(at(r), at(t));
          straight += prod(at(r), at(t));
          const double got = table.entry(t, r);
          if (t < rem) {
            ++compared;
            if (got != seq) ++failures;
          } else if ((t - rem) % w == w - 1) {
            ++compared;
            const double e = std::fabs(got - static_cast<double>(straight)) / static_cast<double>(straight);
            worst = std::max(worst, e);
            if (e > kClosureRel) ++failures;
          }
        }
      }
      for (int base = rem; base < k; base += w)
        for (int row = 0; row + 1 < w; ++row)
          for (int col = 0; col < w; ++col) {
            const Range z = closed_form(row, col);
            long double want = 0.0L;
            for (int t = z.lo; t <= z.hi; ++t) want += prod(at(z.thread), at(base + t));
            const double got = table.entry(base + row, col);
            const double e = std::fabs(got - static_cast<double>(want)) / static_cast<double>(want);
            worst = std::max(worst, e);
            ++compared;
            if (e > kClosureRel) ++failures;
          }
    }
  }
  o.passed = failures == 0;
  std::ostringstream s;
  s << compared << " entries, " << failures << " failures, max rel error " << worst;
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// The three snapshots of the W = 8 block, "thread:lo:hi" per column.
const char* const kInitial[8] = {
    "0:0:0 0:1:1 0:2:2 0:3:3 0:4:4 0:5:5 0:6:6 0:7:7", "1:0:0 1:1:1 1:2:2 1:3:3 1:4:4 1:5:5 1:6:6 1:7:7",
    "2:0:0 2:1:1 2:2:2 2:3:3 2:4:4 2:5:5 2:6:6 2:7:7", "3:0:0 3:1:1 3:2:2 3:3:3 3:4:4 3:5:5 3:6:6 3:7:7",
    "4:0:0 4:1:1 4:2:2 4:3:3 4:4:4 4:5:5 4:6:6 4:7:7", "5:0:0 5:1:1 5:2:2 5:3:3 5:4:4 5:5:5 5:6:6 5:7:7",
    "6:0:0 6:1:1 6:2:2 6:3:3 6:4:4 6:5:5 6:6:6 6:7:7", "7:0:0 7:1:1 7:2:2 7:3:3 7:4:4 7:5:5 7:6:6 7:7:7",
};

const char* const kSnapshots[3][8] = {
    {
        "0:0:0 1:1:1 0:2:2 1:3:3 0:4:4 1:5:5 0:6:6 1:7:7",
        "0:0:1 1:0:1 0:2:3 1:2:3 0:4:5 1:4:5 0:6:7 1:6:7",
        "2:0:0 3:1:1 2:2:2 3:3:3 2:4:4 3:5:5 2:6:6 3:7:7",
        "2:0:1 3:0:1 2:2:3 3:2:3 2:4:5 3:4:5 2:6:7 3:6:7",
        "4:0:0 5:1:1 4:2:2 5:3:3 4:4:4 5:5:5 4:6:6 5:7:7",
        "4:0:1 5:0:1 4:2:3 5:2:3 4:4:5 5:4:5 4:6:7 5:6:7",
        "6:0:0 7:1:1 6:2:2 7:3:3 6:4:4 7:5:5 6:6:6 7:7:7",
        "6:0:1 7:0:1 6:2:3 7:2:3 6:4:5 7:4:5 6:6:7 7:6:7",
    },
    {
        "0:0:0 1:1:1 0:2:2 1:3:3 0:4:4 1:5:5 0:6:6 1:7:7",
        "0:0:1 1:0:1 2:2:3 3:2:3 0:4:5 1:4:5 2:6:7 3:6:7",
        "2:0:0 3:1:1 2:2:2 3:3:3 2:4:4 3:5:5 2:6:6 3:7:7",
        "0:0:3 1:0:3 2:0:3 3:0:3 0:4:7 1:4:7 2:4:7 3:4:7",
        "4:0:0 5:1:1 4:2:2 5:3:3 4:4:4 5:5:5 4:6:6 5:7:7",
        "4:0:1 5:0:1 6:2:3 7:2:3 4:4:5 5:4:5 6:6:7 7:6:7",
        "6:0:0 7:1:1 6:2:2 7:3:3 6:4:4 7:5:5 6:6:6 7:7:7",
        "4:0:3 5:0:3 6:0:3 7:0:3 4:4:7 5:4:7 6:4:7 7:4:7",
    },
    {
        "0:0:0 1:1:1 0:2:2 1:3:3 0:4:4 1:5:5 0:6:6 1:7:7",
        "0:0:1 1:0:1 2:2:3 3:2:3 0:4:5 1:4:5 2:6:7 3:6:7",
        "2:0:0 3:1:1 2:2:2 3:3:3 2:4:4 3:5:5 2:6:6 3:7:7",
        "0:0:3 1:0:3 2:0:3 3:0:3 4:4:7 5:4:7 6:4:7 7:4:7",
        "4:0:0 5:1:1 4:2:2 5:3:3 4:4:4 5:5:5 4:6:6 5:7:7",
        "4:0:1 5:0:1 6:2:3 7:2:3 4:4:5 5:4:5 6:6:7 7:6:7",
        "6:0:0 7:1:1 6:2:2 7:3:3 6:4:4 7:5:5 6:6:6 7:7:7",
        "0:0:7 1:0:7 2:0:7 3:0:7 4:0:7 5:0:7 6:0:7 7:0:7",
    },
};

ZGrid parse_grid(const char* const (&rows)[8]) {
  ZGrid grid;
  for (const char* row : rows) {
    std::istringstream in(row);
    std::vector<ZRef> cells;
    std::string cell;
    while (in >> cell) {
      ZRef z;
      std::sscanf(cell.c_str(), "%d:%d:%d", &z.thread, &z.lo, &z.hi);
      cells.push_back(z);
    }
    grid.push_back(cells);
  }
  return grid;
}

int grid_mismatches(const ZGrid& got, const ZGrid& want) {
  int bad = 0;
  if (got.size() != want.size()) return 64;
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (got[i].size() != want[i].size()) return 64;
    for (std::size_t j = 0; j < want[i].size(); ++j)
      if (!(got[i][j] == want[i][j])) ++bad;
  }
  return bad;
}

Outcome criterion_snapshots() {
  Outcome o;
  int bad = grid_mismatches(transposed_products_grid(8), parse_grid(kInitial));
  const auto stages = replay_schedule(8);
  if (stages.size() != 3) {
    o.passed = false;
    o.detail = "expected 3 snapshots";
    return o;
  }
  for (std::size_t s = 0; s < 3; ++s) bad += grid_mismatches(stages[s], parse_grid(kSnapshots[s]));
  o.passed = bad == 0;
  o.detail = std::to_string(4 * 64) + " entries, " + std::to_string(bad) + " mismatches";
  return o;
}

// ---------------------------------------------------------------------------
bool is_tie(std::span<const double> w, long double stop) {
  const auto p = testing::exact_prefix(w);
  const long double band = kTieBandRel * p.back();
  return std::any_of(p.begin(), p.end(), [&](long double b) { return std::fabs(b - stop) <= band; });
}

Outcome criterion_search() {
  constexpr int w = 8;
  constexpr int k = 19;
  constexpr int instances = 100'000;
  RandomSource rng(0xacc3);
  std::uint64_t real_n = 0, real_agree = 0, non_tie = 0, int_n = 0, int_agree = 0;
  for (int batch = 0; batch < instances / w; ++batch) {
    for (const bool integer : {false, true}) {
      Matrix<double> prod(w, k);
      for (auto& x : prod.data()) x = integer ? static_cast<double>(rng.next_below(9)) : rng.next_unit();
      for (int r = 0; r < w; ++r) prod(at(r), rng.next_below(k)) += 1.0;
      simt::Warp warp(simt::WarpConfig{w, 8, 128});
      const auto table = butterfly_table_from_products(warp, prod, simt::GlobalLayout::block_aligned);
      Lanes<double> stop(w);
      for (int r = 0; r < w; ++r) {
        const auto row = prod.row(at(r));
        if (integer) {
          std::vector<double> mids;
          double before = 0.0;
          for (const double x : row) {
            if (x > 0) mids.push_back(before + x / 2);
            before += x;
          }
          stop[r] = mids[rng.next_below(mids.size())];
        } else {
          stop[r] = table.sum[r] * rng.next_unit();
        }
      }
      const auto got = butterfly_search(warp, table, stop);
      for (int r = 0; r < w; ++r) {
        const auto row = prod.row(at(r));
        const bool agree = static_cast<std::size_t>(got[r]) == testing::brute_index(row, stop[r]);
        if (integer) {
          ++int_n;
          int_agree += agree;
        } else {
          ++real_n;
          real_agree += agree;
          if (!agree && !is_tie(row, stop[r])) ++non_tie;
        }
      }
    }
  }
  const double rate = static_cast<double>(real_agree) / static_cast<double>(real_n);
  Outcome o;
  o.passed = rate >= kSearchAgreement && non_tie == 0 && int_agree == int_n;
  std::ostringstream s;
  s << "real " << real_agree << "/" << real_n << " (" << real_n - real_agree << " ties, " << non_tie
    << " non-tie), integer midpoints " << int_agree << "/" << int_n;
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
Documents random_docs(std::size_t m, int vocab, int max_len, RandomSource& rng) {
  Documents docs(m);
  for (auto& d : docs) {
    d.resize(rng.next_below(static_cast<std::uint64_t>(max_len) + 1));
    for (auto& x : d) x = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab)));
  }
  return docs;
}

Outcome criterion_interchangeable() {
  constexpr int vocab = 50;
  std::uint64_t tokens = 0, int_diff = 0, int_ties = 0, real_diff = 0, real_non_tie = 0;
  for (const int w : {8, 32}) {
    for (const int k : {3, 16, 19, 240}) {
      for (const bool integer : {true, false}) {
        RandomSource rng(hash_keys({0xacc4, static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(k), integer}));
        auto theta = integer ? testing::random_integer_matrix(64, at(k), rng, 4) : testing::random_matrix(64, at(k), rng, 0.1);
        auto phi = integer ? testing::random_integer_matrix(vocab, at(k), rng, 4) : testing::random_matrix(vocab, at(k), rng, 0.1);
        for (std::size_t i = 0; i < 64; ++i) theta(i, 0) += 1.0;
        for (std::size_t v = 0; v < vocab; ++v) phi(v, 0) += 1.0;
        const auto docs = random_docs(64, vocab, 20, rng);
        const auto u = InjectedUniforms::generate(docs, rng.next_u64());
        KernelOptions opts;
        opts.warp = simt::WarpConfig{w, 8, 128};
        const DrawInputs<double> in{theta, phi, docs};
        const auto basic = draw_z(Kernel::basic, in, u, opts).z;
        const auto transposed = draw_z(Kernel::transposed, in, u, opts).z;
        const auto butterfly = draw_z(Kernel::butterfly, in, u, opts).z;
        for (std::size_t m = 0; m < docs.size(); ++m)
          for (std::size_t n = 0; n < docs[m].size(); ++n) {
            std::vector<double> weights(at(k));
            for (int t = 0; t < k; ++t) weights[at(t)] = theta(m, at(t)) * phi(at(docs[m][n]), at(t));
            const auto total = testing::exact_prefix(weights).back();
            const long double stop = total * u.unit(m, n, 0);
            const bool tie = is_tie(weights, stop);
            const bool same = basic[m][n] == transposed[m][n] && basic[m][n] == butterfly[m][n];
            ++tokens;
            if (integer) {
              int_ties += tie;
              int_diff += !same;
            } else if (!same) {
              ++real_diff;
              real_non_tie += !tie;
            }
          }
      }
    }
  }
  Outcome o;
  o.passed = int_diff == 0 && int_ties == 0 && real_non_tie == 0;
  std::ostringstream s;
  s << tokens << " token draws; integer regime " << int_diff << " differences, " << int_ties
    << " ties; real regime " << real_diff << " differences, " << real_non_tie << " outside the tie band";
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
Outcome criterion_coalescing() {
  constexpr int w = 32;
  constexpr std::size_t docs_n = 64;
  constexpr int vocab = 40;
  const simt::Phase build = simt::Phase::build;
  const simt::Phase block = simt::Phase::cache_block;
  const simt::Space local = simt::Space::local;
  const simt::Space global = simt::Space::global;
  const simt::Access read = simt::Access::read;

  Outcome o;
  std::ostringstream s;
  int bad_k = 0;
  for (const int k : bench::kDefaultTopics) {
    RandomSource rng(hash_keys({0xacc5, static_cast<std::uint64_t>(k)}));
    const auto theta = testing::random_matrix(docs_n, at(k), rng, 0.1).cast<float>();
    const auto phi = testing::random_matrix(vocab, at(k), rng, 0.1).cast<float>();
    const auto docs = random_docs(docs_n, vocab, 30, rng);
    KernelOptions opts;
    opts.warp = simt::WarpConfig{w, 4, 128};
    const DrawInputs<float> in{theta, phi, docs};
    const HashedUniforms u(k);
    const auto tr = draw_z(Kernel::transposed, in, u, opts);
    const auto bf = draw_z(Kernel::butterfly, in, u, opts);

    const std::uint64_t steps = bf.warp_steps;
    const std::uint64_t blocks = static_cast<std::uint64_t>(k / w);
    const std::uint64_t rem = static_cast<std::uint64_t>(k % w);
    const std::uint64_t groups = docs_n / w;
    bool ok = tr.warp_steps == steps;

    // (a) each W-wide block fetch of theta is one transaction
    for (const auto* run : {&tr, &bf}) {
      const auto fetch = run->trace.sum_access(nullptr, &block, &global, &read);
      ok = ok && fetch.accesses == blocks * w * groups;
      ok = ok && (blocks == 0 || (fetch.min_transactions == 1 && fetch.max_transactions == 1));
    }
    // (b) transposed: floor(K/W)*W scattered local reads per warp step
    const auto piper = tr.trace.sum_access(nullptr, &build, &local, &read);
    ok = ok && piper.scattered == blocks * w * steps;
    // (c) butterfly: no scattered local traffic while building
    const auto bf_local = bf.trace.sum_access(nullptr, &build, &local, nullptr);
    ok = ok && bf_local.scattered == 0;
    // W broadcasts, then W-1 xor-shuffles and W-1 butterfly adds per block, plus one running add
    const auto ops = bf.trace.phase_ops().at(build);
    ok = ok && ops.shuffles == w * steps;
    ok = ok && ops.shuffle_xors == blocks * (w - 1) * steps;
    ok = ok && ops.adds - (rem + blocks) * steps == blocks * (w - 1) * steps;
    if (!ok) ++bad_k;
    s << " K=" << k << ":" << piper.scattered << "/" << bf_local.scattered;
  }
  o.passed = bad_k == 0;
  o.detail = std::to_string(bench::kDefaultTopics.size()) + " topic counts, " + std::to_string(bad_k) +
             " failing; scattered build reads transposed/butterfly" + s.str();
  return o;
}

// ---------------------------------------------------------------------------
double pearson_chi2(const std::vector<std::uint64_t>& counts, const std::vector<double>& weights, std::uint64_t n) {
  long double total = 0.0L;
  for (const double x : weights) total += x;
  double chi2 = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double e = static_cast<double>(n) * static_cast<double>(weights[k] / total);
    const double d = static_cast<double>(counts[k]) - e;
    chi2 += d * d / e;
  }
  return chi2;
}

Outcome criterion_chi_square() {
  constexpr int k = 19;
  constexpr std::uint64_t n = 1'000'000;
  RandomSource wrng(0xacc6);
  std::vector<double> weights(k);
  for (auto& x : weights) x = 0.05 + wrng.next_unit();

  std::map<std::string, std::vector<std::uint64_t>> counts;
  {
    auto& c = counts["binary"];
    c.assign(k, 0);
    const auto table = dist::build_prefix(weights);
    RandomSource rng(1);
    for (std::uint64_t i = 0; i < n; ++i) ++c[dist::draw(table, rng)];
  }
  {
    auto& c = counts["alias"];
    c.assign(k, 0);
    const auto table = dist::build_alias_vose(weights);
    RandomSource rng(2);
    for (std::uint64_t i = 0; i < n; ++i) ++c[dist::alias_draw(table, rng)];
  }
  {
    auto& c = counts["butterfly"];
    c.assign(k, 0);
    constexpr int w = 32;
    Matrix<double> prod(w, k);
    for (int r = 0; r < w; ++r)
      for (int t = 0; t < k; ++t) prod(at(r), at(t)) = weights[at(t)];
    simt::Warp warp(simt::WarpConfig{w, 8, 128});
    const auto table = butterfly_table_from_products(warp, prod, simt::GlobalLayout::block_aligned);
    RandomSource rng(3);
    std::uint64_t drawn = 0;
    while (drawn < n) {
      const auto stop = simt::lanewise<double>(w, [&](int r) { return dist::stop_value(table.sum[r], rng.next_unit()); });
      const auto got = butterfly_search(warp, table, stop);
      for (int r = 0; r < w && drawn < n; ++r, ++drawn) ++c[at(got[r])];
    }
  }

  Outcome o;
  const double lib_critical = bench::chi_square_critical(k - 1, 0.001);
  o.passed = std::fabs(lib_critical - kChi2Critical) < 1e-3;
  std::ostringstream s;
  s.precision(2);
  s << std::fixed;
  for (const auto& [name, c] : counts) {
    const double chi2 = pearson_chi2(c, weights, n);
    o.passed = o.passed && chi2 < kChi2Critical;
    s << name << " " << chi2 << ", ";
  }
  s << "critical " << kChi2Critical << " (18 dof, alpha 0.001)";
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
double ari(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++cells[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  const auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [key, x] : cells) index += c2(x);
  for (const auto& [key, x] : rows) sa += c2(x);
  for (const auto& [key, x] : cols) sb += c2(x);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<int> modal(const ZMatrix& z, std::size_t docs, int topics) {
  std::vector<int> out;
  for (std::size_t m = 0; m < docs; ++m) {
    std::vector<int> c(at(topics), 0);
    for (const int t : z[m]) ++c[at(t)];
    out.push_back(static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin()));
  }
  return out;
}

Outcome criterion_lda() {
  constexpr int topics = 4;
  const auto planted = lda::generate_planted_corpus(topics, 40, 64, 50, 2024);
  Outcome o;
  std::ostringstream s;
  s.precision(4);
  for (const int w : {4, 32}) {
    std::map<Kernel, lda::RunResult> results;
    for (const Kernel kernel : {Kernel::basic, Kernel::butterfly}) {
      lda::RunOptions opts;
      opts.topics = topics;
      opts.iterations = 100;
      opts.seed = 7;
      opts.stops = lda::StopMode::injected_seeded;
      opts.gibbs.kernel = kernel;
      opts.gibbs.kernel_options.warp = simt::WarpConfig{w, 8, 128};
      results.emplace(kernel, lda::run(planted.corpus, opts));
    }
    const auto& bf = results.at(Kernel::butterfly);
    const double ll_bf = bf.log_likelihood.back();
    const double ll_basic = results.at(Kernel::basic).log_likelihood.back();
    const double score = ari(modal(bf.state.z, planted.corpus.real_docs(), topics), planted.doc_topic);
    const double rel = std::fabs(ll_bf - ll_basic) / std::fabs(ll_basic);
    o.passed = o.passed && score >= kAriMin && rel <= kLoglikRel;
    s << (w == 4 ? "" : "; ") << "W=" << w << ": ARI " << score << ", loglik " << ll_bf << " vs basic " << ll_basic << " (rel " << rel << ")";
  }
  o.detail = s.str();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
    double max_seconds;  // 0: no limit
  };
  const std::vector<Criterion> criteria = {
      {1, "butterfly table entries match the closed form", criterion_closure, 10.0},
      {2, "W=8 replacement snapshots match the worked example", criterion_snapshots, 1.0},
      {3, "butterfly search agrees with the straight-prefix oracle", criterion_search, 30.0},
      {4, "basic, transposed and butterfly kernels draw the same z", criterion_interchangeable, 0.0},
      {5, "coalescing and operation counts at W=32", criterion_coalescing, 0.0},
      {6, "binary, alias and butterfly samplers pass chi-square", criterion_chi_square, 0.0},
      {7, "planted-topic LDA recovery with the butterfly kernel", criterion_lda, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.max_seconds > 0 && secs > c.max_seconds) {
      o.passed = false;
      o.detail += "; over the " + std::to_string(static_cast<int>(c.max_seconds)) + "s budget";
    }
    std::printf("%s criterion %d: %s [%s] (%.2fs)\n", o.passed ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.passed;
  }
  return failed == 0 ? 0 : 1;
}
