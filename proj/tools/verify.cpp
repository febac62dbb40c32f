#include <algorithm>
#include <cmath>
#include <sstream>

#include "bfly/butterfly.hpp"
#include "bfly/dist.hpp"
#include "bfly/error.hpp"
#include "cli.hpp"

namespace bfly::cli {
namespace {

using simt::Lanes;

CheckResult named(std::string name) {
  CheckResult c;
  c.name = std::move(name);
  return c;
}

double rel_error(double got, double want) {
  if (got == want) return 0.0;
  return std::fabs(got - want) / std::max(std::fabs(got), std::fabs(want));
}

CheckResult check_schedule(int w) {
  auto c = named("schedule");
  const auto sets = replacement_schedule(w);
  for (std::size_t b = 0; b < sets.size(); ++b) {
    const int bit = 1 << b;
    for (const auto& rep : sets[b]) {
      ++c.compared;
      if (rep.row_j - rep.row_i != bit || rep.col_l - rep.col_k != bit) ++c.failures;
    }
  }
  const auto stages = replay_schedule(w);
  const auto& last = stages.back();
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < w; ++j) {
      ++c.compared;
      if (!(last[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == entry_zref(i, j, w))) ++c.failures;
    }
  c.passed = c.failures == 0;
  return c;
}

// Builds tables from random products and compares against the closed form,
// the straight prefix sums and (for the remnant) a sequential accumulation.
template <class Real>
std::pair<CheckResult, CheckResult> check_tables(const VerifyConfig& cfg, double tolerance) {
  auto closure = named("closure");
  auto bottom = named("bottom-row");
  const int w = cfg.width;
  const int k = cfg.topics;
  const int rem = k % w;
  RandomSource rng(hash_keys({cfg.seed, 0xc105}));
  for (int trial = 0; trial < cfg.trials; ++trial) {
    Matrix<Real> prod(static_cast<std::size_t>(w), static_cast<std::size_t>(k));
    for (auto& x : prod.data()) x = static_cast<Real>(rng.next_unit());
    simt::Warp warp(simt::WarpConfig{w, static_cast<int>(sizeof(Real)), 128});
    const auto table = butterfly_table_from_products(warp, prod, simt::GlobalLayout::block_aligned);
    for (int r = 0; r < w; ++r) {
      Real seq{0};
      long double exact = 0.0L;
      for (int t = 0; t < k; ++t) {
        const Real x = prod(static_cast<std::size_t>(r), static_cast<std::size_t>(t));
        seq += x;
        exact += x;
        if (t < rem) {
          ++bottom.compared;
          if (table.entry(t, r) != seq) ++bottom.failures;
        } else if ((t - rem) % w == w - 1) {
          ++bottom.compared;
          const double e = rel_error(static_cast<double>(table.entry(t, r)), static_cast<double>(exact));
          bottom.max_rel_error = std::max(bottom.max_rel_error, e);
          if (e > tolerance) ++bottom.failures;
        }
      }
    }
    for (int j = rem; j < k; j += w) {
      Matrix<Real> block(static_cast<std::size_t>(w), static_cast<std::size_t>(w));
      for (int r = 0; r < w; ++r)
        for (int t = 0; t < w; ++t)
          block(static_cast<std::size_t>(r), static_cast<std::size_t>(t)) =
              prod(static_cast<std::size_t>(r), static_cast<std::size_t>(j + t));
      for (int row = 0; row + 1 < w; ++row)
        for (int col = 0; col < w; ++col) {
          ++closure.compared;
          const double e = rel_error(static_cast<double>(table.entry(j + row, col)), entry_oracle(row, col, w, block));
          closure.max_rel_error = std::max(closure.max_rel_error, e);
          if (e > tolerance) ++closure.failures;
        }
    }
  }
  closure.passed = closure.failures == 0;
  bottom.passed = bottom.failures == 0;
  return {closure, bottom};
}

// Integer products with midpoint stops must agree exactly; random reals may
// differ only inside the tie band.
template <class Real>
std::pair<CheckResult, CheckResult> check_search(const VerifyConfig& cfg) {
  auto exact = named("search-exact");
  auto real = named("search-real");
  const int w = cfg.width;
  const int k = cfg.topics;
  RandomSource rng(hash_keys({cfg.seed, 0x5ea4c4}));
  const int batches = std::max(1, cfg.search_instances / w);
  for (int batch = 0; batch < batches; ++batch) {
    for (const bool integer : {true, false}) {
      Matrix<Real> prod(static_cast<std::size_t>(w), static_cast<std::size_t>(k));
      for (auto& x : prod.data())
        x = integer ? static_cast<Real>(rng.next_below(9)) : static_cast<Real>(rng.next_unit());
      for (int r = 0; r < w; ++r) prod(static_cast<std::size_t>(r), rng.next_below(static_cast<std::uint64_t>(k))) += 1;

      simt::Warp warp(simt::WarpConfig{w, static_cast<int>(sizeof(Real)), 128});
      const auto table = butterfly_table_from_products(warp, prod, simt::GlobalLayout::block_aligned);
      Lanes<Real> stop(w);
      std::vector<std::vector<double>> weights(static_cast<std::size_t>(w));
      for (int r = 0; r < w; ++r) {
        auto& wr = weights[static_cast<std::size_t>(r)];
        for (int t = 0; t < k; ++t) wr.push_back(static_cast<double>(prod(static_cast<std::size_t>(r), static_cast<std::size_t>(t))));
        if (integer) {
          // midpoint of a randomly chosen non-empty interval
          std::vector<double> mids;
          double before = 0.0;
          for (const double x : wr) {
            if (x > 0) mids.push_back(before + x / 2);
            before += x;
          }
          stop[r] = static_cast<Real>(mids[rng.next_below(mids.size())]);
        } else {
          stop[r] = dist::stop_value(table.sum[r], rng.next_unit());
        }
      }
      const auto got = butterfly_search(warp, table, stop);
      for (int r = 0; r < w; ++r) {
        const auto& wr = weights[static_cast<std::size_t>(r)];
        const auto want = dist::oracle_index(wr, static_cast<double>(stop[r]));
        auto& c = integer ? exact : real;
        ++c.compared;
        if (static_cast<std::size_t>(got[r]) == want) continue;
        ++c.failures;
        const double total = static_cast<double>(table.sum[r]);
        const double band = 64 * (sizeof(Real) == 4 ? std::ldexp(total, -23) : dist::tie_tolerance(total));
        if (integer || !dist::near_boundary(wr, static_cast<double>(stop[r]), band)) c.passed = false;
      }
    }
  }
  if (real.compared > 0 && static_cast<double>(real.failures) > 0.001 * static_cast<double>(real.compared))
    real.passed = false;
  real.note = "disagreements must be boundary ties and <= 0.1%";
  return {exact, real};
}

template <class Real>
std::vector<CheckResult> verify_in(const VerifyConfig& cfg, double tolerance) {
  std::vector<CheckResult> out{check_schedule(cfg.width)};
  auto [closure, bottom] = check_tables<Real>(cfg, tolerance);
  auto [exact, real] = check_search<Real>(cfg);
  out.push_back(closure);
  out.push_back(bottom);
  out.push_back(exact);
  out.push_back(real);
  return out;
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyConfig& config) {
  simt::WarpConfig{config.width, 8, 128}.validate();
  if (config.topics < 1) throw Error(ErrorCode::InvalidConfig, "K must be at least 1");
  if (config.trials < 1 || config.search_instances < 1)
    throw Error(ErrorCode::InvalidConfig, "trial counts must be positive");
  if (config.precision == Precision::single) return verify_in<float>(config, std::ldexp(1.0, -16));
  return verify_in<double>(config, std::ldexp(1.0, -40));
}

std::string table_shape(int width, int topics) {
  std::ostringstream out;
  const int rem = topics % width;
  out << "W=" << width << " K=" << topics << ": ";
  if (rem > 0) out << "remnant rows 0.." << rem - 1 << " (plain prefix sums)";
  else out << "no remnant";
  const int blocks = topics / width;
  out << ", " << blocks << (blocks == 1 ? " block" : " blocks");
  for (int b = 0; b < blocks; ++b) {
    const int lo = rem + b * width;
    out << (b ? ", " : " (") << "rows " << lo << ".." << lo + width - 1;
  }
  if (blocks > 0) out << ")";
  out << "; the last row of each block holds the full prefix sum\n";
  // Column entries of the first block, as in the worked example.
  if (blocks > 0 && width <= 8) {
    for (int i = 0; i < width; ++i) {
      out << "  row " << rem + i << ":";
      for (int j = 0; j < width; ++j) {
        ZRef z = entry_zref(i, j, width);
        if (i == width - 1) z.lo = -rem;
        out << " Z" << z.thread << "[" << z.lo + rem << ":" << z.hi + rem << "]";
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace bfly::cli
