#include "bfly/bench.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <iomanip>

#include "bfly/error.hpp"

namespace bfly::bench {

ChiSquare chi_square(std::span<const std::uint64_t> observed, std::span<const double> expected) {
  if (observed.size() != expected.size())
    throw Error(ErrorCode::DegenerateBins, "observed and expected bin counts differ");
  double mass = 0.0;
  std::uint64_t n = 0;
  int live = 0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    if (!(expected[k] >= 0.0) || !std::isfinite(expected[k]))
      throw Error(ErrorCode::DegenerateBins, "expected probability " + std::to_string(k) + " is invalid");
    mass += expected[k];
    n += observed[k];
    if (expected[k] > 0.0) ++live;
  }
  if (live < 2) throw Error(ErrorCode::DegenerateBins, "need at least two bins with positive probability");
  if (std::abs(mass - 1.0) > 1e-9) throw Error(ErrorCode::DegenerateBins, "expected probabilities do not sum to 1");

  ChiSquare out;
  out.dof = live - 1;
  const auto total = static_cast<double>(n);
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const auto o = static_cast<double>(observed[k]);
    if (expected[k] == 0.0) {
      if (observed[k] != 0) out.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double e = total * expected[k];
    out.statistic += (o - e) * (o - e) / e;
  }
  return out;
}

double chi_square_critical(int dof, double significance) {
  if (dof < 1 || !(significance > 0.0 && significance < 1.0))
    throw Error(ErrorCode::InvalidConfig, "chi-square critical value needs dof >= 1 and significance in (0,1)");
  const boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, significance));
}

TraceReport TraceReport::from(std::string kernel, int width, const simt::TraceRecorder& trace) {
  TraceReport report;
  report.kernel = std::move(kernel);
  report.width = width;
  for (const auto& [key, stats] : trace.access_stats()) report.arrays.push_back({key, stats});
  for (const auto& [phase, ops] : trace.phase_ops()) report.ops.emplace_back(phase, ops);
  return report;
}

void TraceReport::write_csv(std::ostream& out, bool header) const {
  if (header) out << "kernel,array,phase,space,kind,accesses,transactions,scattered,min_txn,max_txn\n";
  for (const auto& row : arrays) {
    out << kernel << ',' << row.key.array << ',' << simt::to_string(row.key.phase) << ','
        << simt::to_string(row.key.space) << ',' << simt::to_string(row.key.kind) << ',' << row.stats.accesses << ','
        << row.stats.transactions << ',' << row.stats.scattered << ',' << row.stats.min_transactions << ','
        << row.stats.max_transactions << '\n';
  }
}

void SweepResult::write_csv(std::ostream& out, bool with_timing) const {
  out << "# schema " << kSweepSchema << '\n';
  out << "kernel,K,global_txn,local_txn,scattered_local,shuffles,adds,draws,wall_ms,warp_steps\n";
  const auto flags = out.flags();
  for (const auto& r : rows) {
    out << to_string(r.kernel) << ',' << r.topics << ',' << r.global_txn << ',' << r.local_txn << ','
        << r.scattered_local << ',' << r.shuffles << ',' << r.adds << ',' << r.draws << ',' << std::fixed
        << std::setprecision(3) << (with_timing ? r.wall_ms : 0.0) << ',' << r.warp_steps << '\n';
    out.flags(flags);
  }
}

SweepResult run_sweep(lda::Corpus corpus, const SweepOptions& options) {
  options.kernel.warp.validate();
  lda::pad_to_multiple(corpus, options.kernel.warp.width);
  const simt::Phase build = simt::Phase::build;
  const simt::Space local = simt::Space::local;
  const simt::Space global = simt::Space::global;
  const simt::Access read = simt::Access::read;

  SweepResult result;
  for (const int topics : options.topics) {
    if (topics < 1) throw Error(ErrorCode::InvalidConfig, "K must be at least 1");
    const auto key = static_cast<std::uint64_t>(topics);
    const auto state = lda::initialize(corpus, topics, hash_keys({options.seed, key}), lda::GibbsOptions{});
    const HashedUniforms uniforms(hash_keys({options.seed, key, 1}));
    for (const Kernel kernel : options.kernels) {
      const auto start = std::chrono::steady_clock::now();
      const auto run =
          draw_z_in(options.precision, kernel, state.params.theta, state.params.phi, corpus.docs, uniforms, options.kernel);
      const auto stop = std::chrono::steady_clock::now();

      SweepRow row;
      row.kernel = kernel;
      row.topics = topics;
      row.global_txn = run.trace.sum_access(nullptr, nullptr, &global, nullptr).transactions;
      row.local_txn = run.trace.sum_access(nullptr, nullptr, &local, nullptr).transactions;
      row.scattered_local = run.trace.sum_access(nullptr, &build, &local, &read).scattered;
      const auto& phase_ops = run.trace.phase_ops();
      if (const auto it = phase_ops.find(build); it != phase_ops.end()) {
        row.shuffles = it->second.shuffles + it->second.shuffle_xors;
        row.adds = it->second.adds;
      }
      row.draws = run.lane_draws;
      row.warp_steps = run.warp_steps;
      row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      result.rows.push_back(row);
    }
  }
  return result;
}

}  // namespace bfly::bench
