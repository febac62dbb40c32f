#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bfly/kernels.hpp"
#include "bfly/lda.hpp"
#include "bfly/simt.hpp"

// Reports over warp traces and kernel sweeps across topic counts.
namespace bfly::bench {

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
};

/// sum (O - n*E)^2 / (n*E). Bins with E == 0 must be empty and are dropped.
/// Throws DegenerateBins for fewer than two live bins, a size mismatch, or
/// expected probabilities that do not sum to 1.
ChiSquare chi_square(std::span<const std::uint64_t> observed, std::span<const double> expected);

/// Upper-tail critical value: P(X > c) = significance for X ~ chi2(dof).
double chi_square_critical(int dof, double significance);

struct ArrayRow {
  simt::AccessKey key;
  simt::AccessStats stats;
};

struct TraceReport {
  std::string kernel;
  int width = 32;
  std::vector<ArrayRow> arrays;
  std::vector<std::pair<simt::Phase, simt::OpCounts>> ops;

  static TraceReport from(std::string kernel, int width, const simt::TraceRecorder& trace);
  /// Columns: kernel,array,phase,space,kind,accesses,transactions,scattered,min_txn,max_txn
  void write_csv(std::ostream& out, bool header = true) const;
};

struct SweepRow {
  Kernel kernel = Kernel::basic;
  int topics = 0;
  std::uint64_t global_txn = 0;       // every global transaction
  std::uint64_t local_txn = 0;        // every local transaction
  std::uint64_t scattered_local = 0;  // scattered local reads while building the sums table
  std::uint64_t shuffles = 0;         // shuffles and xor-shuffles while building the table
  std::uint64_t adds = 0;             // additions while building the table
  std::uint64_t draws = 0;            // lane draws
  std::uint64_t warp_steps = 0;
  double wall_ms = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  /// A "# schema" line, then kernel,K,global_txn,local_txn,scattered_local,
  /// shuffles,adds,draws,wall_ms,warp_steps. wall_ms is omitted (written as
  /// 0) when `with_timing` is false so that files are reproducible.
  void write_csv(std::ostream& out, bool with_timing = true) const;
};

inline constexpr int kSweepSchema = 1;
inline const std::vector<int> kDefaultTopics = {16, 48, 80, 112, 144, 176, 208, 240};

struct SweepOptions {
  std::vector<int> topics = kDefaultTopics;
  std::vector<Kernel> kernels = {Kernel::basic, Kernel::transposed, Kernel::butterfly};
  std::uint64_t seed = 0;
  Precision precision = Precision::double_precision;
  KernelOptions kernel{};
};

/// One z-draw phase per (kernel, K) on parameters initialized from the corpus.
/// All kernels for a K share the same parameters and uniforms.
SweepResult run_sweep(lda::Corpus corpus, const SweepOptions& options);

}  // namespace bfly::bench
