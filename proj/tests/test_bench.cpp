#include "doctest.h"

#include <cmath>
#include <sstream>

#include "bfly/bench.hpp"
#include "bfly/error.hpp"

using namespace bfly;
using namespace bfly::bench;

TEST_CASE("chi-square statistic") {
  const std::vector<std::uint64_t> proportional{25, 50, 25};
  CHECK(chi_square(proportional, std::vector<double>{0.25, 0.5, 0.25}).statistic == 0.0);
  const auto two = chi_square(std::vector<std::uint64_t>{60, 40}, std::vector<double>{0.5, 0.5});
  CHECK(two.statistic == doctest::Approx(4.0));
  CHECK(two.dof == 1);
  // zero-probability bins drop out of the degrees of freedom
  CHECK(chi_square(std::vector<std::uint64_t>{5, 0, 5}, std::vector<double>{0.5, 0.0, 0.5}).dof == 1);
  CHECK(std::isinf(chi_square(std::vector<std::uint64_t>{5, 1, 5}, std::vector<double>{0.5, 0.0, 0.5}).statistic));

  CHECK_THROWS_WITH_AS(chi_square(std::vector<std::uint64_t>{3}, std::vector<double>{1.0}),
                       doctest::Contains("DegenerateBins"), Error);
  CHECK_THROWS_AS(chi_square(std::vector<std::uint64_t>{3, 4}, std::vector<double>{0.5}), Error);
  CHECK_THROWS_AS(chi_square(std::vector<std::uint64_t>{3, 4}, std::vector<double>{0.5, 0.6}), Error);
}

TEST_CASE("chi-square critical values") {
  // standard table entries
  CHECK(chi_square_critical(1, 0.05) == doctest::Approx(3.841).epsilon(1e-3));
  CHECK(chi_square_critical(18, 0.001) == doctest::Approx(42.312).epsilon(1e-4));
  CHECK(chi_square_critical(10, 0.01) == doctest::Approx(23.209).epsilon(1e-4));
  CHECK_THROWS_AS(chi_square_critical(0, 0.05), Error);
}

TEST_CASE("uniform sampler passes chi-square") {
  RandomSource rng(31);
  std::vector<std::uint64_t> counts(19);
  for (int n = 0; n < 1'000'000; ++n) ++counts[rng.next_below(19)];
  const auto chi = chi_square(counts, std::vector<double>(19, 1.0 / 19));
  CHECK(chi.statistic < chi_square_critical(18, 0.001));
}

TEST_CASE("sweep rows") {
  const auto planted = lda::generate_planted_corpus(4, 60, 40, 8, 2);
  SweepOptions opts;
  opts.kernel.warp = simt::WarpConfig{8, 4, 128};
  const auto sweep = run_sweep(planted.corpus, opts);
  REQUIRE(sweep.rows.size() == 24);
  for (std::size_t n = 0; n < sweep.rows.size(); ++n) {
    const auto& row = sweep.rows[n];
    CHECK(row.topics == kDefaultTopics[n / 3]);
    CHECK(row.kernel == opts.kernels[n % 3]);
    const auto blocks = static_cast<std::uint64_t>(row.topics / 8);
    switch (row.kernel) {
      case Kernel::basic:
        CHECK(row.global_txn == 0);
        CHECK(row.draws == 320);
        break;
      case Kernel::transposed:
        CHECK(row.scattered_local == blocks * 8 * row.warp_steps);
        CHECK(row.draws == row.warp_steps * 8);
        break;
      case Kernel::butterfly:
        CHECK(row.scattered_local == 0);
        CHECK(row.shuffles == (8 + blocks * 7) * row.warp_steps);
        CHECK(row.adds == (static_cast<std::uint64_t>(row.topics % 8) + blocks * 8) * row.warp_steps);
        break;
    }
  }

  std::ostringstream a;
  std::ostringstream b;
  sweep.write_csv(a, false);
  run_sweep(planted.corpus, opts).write_csv(b, false);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("# schema 1\nkernel,K,global_txn,local_txn,scattered_local,shuffles,adds,draws,wall_ms,warp_steps\n", 0) == 0);

  opts.topics = {19};
  opts.kernels = {Kernel::butterfly};
  CHECK(run_sweep(planted.corpus, opts).rows.size() == 1);
  opts.topics = {0};
  CHECK_THROWS_AS(run_sweep(planted.corpus, opts), Error);
}

TEST_CASE("trace report") {
  const auto planted = lda::generate_planted_corpus(2, 20, 8, 5, 3);
  const auto state = lda::initialize(planted.corpus, 19, 1, lda::GibbsOptions{});
  KernelOptions opts;
  opts.warp = simt::WarpConfig{8, 4, 128};
  const auto run = draw_z_in(Precision::single, Kernel::transposed, state.params.theta, state.params.phi,
                             planted.corpus.docs, HashedUniforms(2), opts);
  const auto report = TraceReport::from("transposed", 8, run.trace);
  CHECK_FALSE(report.arrays.empty());
  for (const auto& row : report.arrays) {
    CHECK(row.stats.transactions <= row.stats.accesses * 8);
    CHECK(row.stats.transactions >= row.stats.accesses);
  }
  std::ostringstream out;
  report.write_csv(out);
  CHECK(out.str().find("transposed,a,build,local,read,") != std::string::npos);
}
