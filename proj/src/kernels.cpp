#include "bfly/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "bfly/butterfly.hpp"
#include "bfly/dist.hpp"
#include "bfly/error.hpp"
#include "bfly/random.hpp"

namespace bfly {

using simt::Lanes;

std::string_view to_string(Kernel k) noexcept {
  switch (k) {
    case Kernel::basic: return "basic";
    case Kernel::transposed: return "transposed";
    case Kernel::butterfly: return "butterfly";
  }
  return "basic";
}

Kernel parse_kernel(std::string_view name) {
  if (name == "basic") return Kernel::basic;
  if (name == "transposed") return Kernel::transposed;
  if (name == "butterfly") return Kernel::butterfly;
  throw Error(ErrorCode::InvalidConfig, "unknown kernel '" + std::string(name) + "'");
}

double HashedUniforms::unit(std::size_t doc, std::size_t /*word*/, std::uint64_t step) const {
  return RandomSource::derive({seed_, static_cast<std::uint64_t>(doc), step}).next_unit();
}

InjectedUniforms::InjectedUniforms(const Documents& docs, std::vector<double> values) : values_(std::move(values)) {
  offsets_.reserve(docs.size());
  std::size_t total = 0;
  for (const auto& doc : docs) {
    offsets_.push_back(total);
    total += doc.size();
  }
  if (values_.size() != total)
    throw Error(ErrorCode::InvalidConfig, "stop injection holds " + std::to_string(values_.size()) +
                                              " values for " + std::to_string(total) + " tokens");
  for (std::size_t n = 0; n < values_.size(); ++n)
    if (!(values_[n] >= 0.0 && values_[n] < 1.0))
      throw Error(ErrorCode::InvalidConfig, "injected value " + std::to_string(n) + " is outside [0, 1)");
}

InjectedUniforms InjectedUniforms::generate(const Documents& docs, std::uint64_t seed) {
  RandomSource rng(seed);
  std::vector<double> values;
  for (const auto& doc : docs)
    for (std::size_t i = 0; i < doc.size(); ++i) values.push_back(rng.next_unit());
  return InjectedUniforms(docs, std::move(values));
}

double InjectedUniforms::unit(std::size_t doc, std::size_t word, std::uint64_t /*step*/) const {
  return values_[offsets_[doc] + word];
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1U, threads), count);
  if (workers <= 1) {
    for (std::size_t n = 0; n < count; ++n) fn(n);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failed_at = count;
  std::mutex guard;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t n = next++; n < count; n = next++) {
        try {
          fn(n);
        } catch (...) {
          std::lock_guard lock(guard);
          // Report the lowest failing index so errors are deterministic.
          if (n < failed_at) {
            failed_at = n;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

template <class Real>
void validate_inputs(const DrawInputs<Real>& in) {
  const std::size_t topics = in.theta.cols();
  if (topics == 0) throw Error(ErrorCode::InvalidConfig, "K must be at least 1");
  if (in.phi.cols() != topics) throw Error(ErrorCode::InvalidConfig, "theta and phi disagree on K");
  if (in.theta.rows() != in.docs.size()) throw Error(ErrorCode::InvalidConfig, "theta needs one row per document");
  if (in.phi.rows() == 0) throw Error(ErrorCode::InvalidConfig, "phi has no vocabulary rows");
  for (const auto* mat : {&in.theta, &in.phi})
    for (Real x : mat->data())
      if (!(x >= Real{0}) || !std::isfinite(static_cast<double>(x)))
        throw Error(ErrorCode::InvalidConfig, "theta and phi entries must be finite and non-negative");
  const auto vocab = static_cast<int>(in.phi.rows());
  for (std::size_t m = 0; m < in.docs.size(); ++m)
    for (int word : in.docs[m])
      if (word < 0 || word >= vocab)
        throw Error(ErrorCode::WordIdOutOfRange,
                    "document " + std::to_string(m) + " uses word " + std::to_string(word));
}

namespace {

[[noreturn]] void throw_all_zero(std::size_t doc, std::size_t word) {
  throw Error(ErrorCode::AllZero,
              "theta-phi products of document " + std::to_string(doc) + " word " + std::to_string(word) + " sum to zero");
}

ZMatrix shaped_like(const Documents& docs) {
  ZMatrix z(docs.size());
  for (std::size_t m = 0; m < docs.size(); ++m) z[m].assign(docs[m].size(), 0);
  return z;
}

template <class Real>
std::size_t search_prefix(std::span<const Real> p, Real stop) {
  std::size_t j = 0;
  std::size_t k = p.size() - 1;
  while (j < k) {
    const std::size_t mid = (j + k) / 2;
    if (stop < p[mid]) {
      k = mid;
    } else {
      j = mid + 1;
    }
  }
  return j;
}

}  // namespace

template <class Real>
ZMatrix draw_z_basic(const DrawInputs<Real>& in, const UniformSource& uniforms) {
  validate_inputs(in);
  const std::size_t topics = in.theta.cols();
  ZMatrix z = shaped_like(in.docs);
  std::vector<Real> p(topics);
  for (std::size_t m = 0; m < in.docs.size(); ++m) {
    for (std::size_t i = 0; i < in.docs[m].size(); ++i) {
      const auto word = static_cast<std::size_t>(in.docs[m][i]);
      Real sum{0};
      for (std::size_t k = 0; k < topics; ++k) {
        sum += in.theta(m, k) * in.phi(word, k);
        p[k] = sum;
      }
      if (!(sum > Real{0})) throw_all_zero(m, i);
      const Real stop = dist::stop_value(sum, uniforms.unit(m, i, i));
      z[m][i] = static_cast<int>(search_prefix<Real>(p, stop));
    }
  }
  return z;
}

namespace {

template <class Real>
KernelRun run_warp_kernel(Kernel kernel, const DrawInputs<Real>& in, const UniformSource& uniforms,
                          const KernelOptions& options) {
  validate_inputs(in);
  const simt::WarpConfig cfg = options.warp;
  cfg.validate();
  const int w = cfg.width;
  const std::size_t docs = in.docs.size();
  if (docs % static_cast<std::size_t>(w) != 0)
    throw Error(ErrorCode::InvalidConfig, "document count " + std::to_string(docs) +
                                              " is not a multiple of the warp width " + std::to_string(w));
  const int topics = static_cast<int>(in.theta.cols());
  const std::size_t groups = docs / static_cast<std::size_t>(w);

  simt::AddressSpace global(cfg.line_size);
  const simt::GlobalArray2D<Real> theta("theta", in.theta, global, cfg, options.layout);
  const simt::GlobalArray2D<Real> phi("phi", in.phi, global, cfg, options.layout);

  KernelRun run;
  run.z = shaped_like(in.docs);
  run.trace = simt::TraceRecorder(options.keep_events);
  run.steps_per_group.assign(groups, 0);
  std::vector<simt::TraceRecorder> traces(groups, simt::TraceRecorder(options.keep_events));

  parallel_for(groups, options.threads, [&](std::size_t q) {
    simt::Warp warp(cfg, &traces[q]);
    const auto theta_local = cache_theta_transposed(warp, theta, q);
    std::optional<ButterflyTable<Real>> table;
    std::optional<TransposedScratch<Real>> scratch;
    if (kernel == Kernel::butterfly) {
      table.emplace(warp, topics);
    } else {
      scratch.emplace(warp, topics);
    }

    const auto doc_of = [&](int r) { return q * static_cast<std::size_t>(w) + static_cast<std::size_t>(r); };
    const auto length = simt::lanewise<long>(w, [&](int r) { return static_cast<long>(in.docs[doc_of(r)].size()); });

    std::uint64_t steps = 0;
    for (long master = 0;; ++master) {
      if (!warp.any(simt::lanewise<bool>(w, [&](int r) { return master < length[r]; }))) break;
      ++steps;
      // Short documents repeat their final word; empty ones ride along on word 0.
      const auto word_index = simt::lanewise<long>(w, [&](int r) { return std::min(master, length[r] - 1); });
      const auto words = simt::lanewise<int>(w, [&](int r) {
        return word_index[r] >= 0 ? in.docs[doc_of(r)][static_cast<std::size_t>(word_index[r])] : 0;
      });

      Lanes<Real> sums(w);
      if (table) {
        build_butterfly_table(warp, theta_local, phi, words, *table);
        sums = table->sum;
      } else {
        sums = compute_partial_sums_transposed(warp, theta_local, phi, words, *scratch);
      }

      Lanes<Real> stop(w, Real{0});
      for (int r = 0; r < w; ++r) {
        if (word_index[r] < 0) continue;
        const auto i = static_cast<std::size_t>(word_index[r]);
        if (!(sums[r] > Real{0})) throw_all_zero(doc_of(r), i);
        stop[r] = dist::stop_value(sums[r], uniforms.unit(doc_of(r), i, static_cast<std::uint64_t>(master)));
      }

      const auto chosen =
          table ? butterfly_search(warp, *table, stop) : lockstep_binary_search(warp, scratch->p, topics, stop);

      for (int r = 0; r < w; ++r) {
        if (word_index[r] < 0) continue;
        const auto i = static_cast<std::size_t>(word_index[r]);
        run.z[doc_of(r)][i] = chosen[r];
        if (options.on_draw) options.on_draw(doc_of(r), i, static_cast<std::uint64_t>(master), chosen[r]);
      }
    }
    run.steps_per_group[q] = steps;
  });

  for (std::size_t q = 0; q < groups; ++q) {
    run.trace.merge(traces[q]);
    run.warp_steps += run.steps_per_group[q];
  }
  run.lane_draws = run.warp_steps * static_cast<std::uint64_t>(w);
  return run;
}

}  // namespace

template <class Real>
KernelRun draw_z_transposed(const DrawInputs<Real>& in, const UniformSource& uniforms, const KernelOptions& options) {
  return run_warp_kernel(Kernel::transposed, in, uniforms, options);
}

template <class Real>
KernelRun draw_z_butterfly(const DrawInputs<Real>& in, const UniformSource& uniforms, const KernelOptions& options) {
  return run_warp_kernel(Kernel::butterfly, in, uniforms, options);
}

template <class Real>
KernelRun draw_z(Kernel kernel, const DrawInputs<Real>& in, const UniformSource& uniforms,
                 const KernelOptions& options) {
  if (kernel != Kernel::basic) return run_warp_kernel(kernel, in, uniforms, options);
  KernelRun run;
  run.z = draw_z_basic(in, uniforms);
  for (const auto& doc : in.docs) run.lane_draws += doc.size();
  if (options.on_draw) {
    for (std::size_t m = 0; m < run.z.size(); ++m)
      for (std::size_t i = 0; i < run.z[m].size(); ++i) options.on_draw(m, i, i, run.z[m][i]);
  }
  return run;
}

#define BFLY_INSTANTIATE(Real)                                                                              \
  template void validate_inputs(const DrawInputs<Real>&);                                                  \
  template ZMatrix draw_z_basic(const DrawInputs<Real>&, const UniformSource&);                            \
  template KernelRun draw_z_transposed(const DrawInputs<Real>&, const UniformSource&, const KernelOptions&); \
  template KernelRun draw_z_butterfly(const DrawInputs<Real>&, const UniformSource&, const KernelOptions&);  \
  template KernelRun draw_z(Kernel, const DrawInputs<Real>&, const UniformSource&, const KernelOptions&);

BFLY_INSTANTIATE(float)
BFLY_INSTANTIATE(double)

#undef BFLY_INSTANTIATE

}  // namespace bfly

namespace bfly {

std::string_view to_string(Precision p) noexcept { return p == Precision::single ? "single" : "double"; }

Precision parse_precision(std::string_view name) {
  if (name == "single" || name == "float") return Precision::single;
  if (name == "double") return Precision::double_precision;
  throw Error(ErrorCode::InvalidConfig, "unknown precision '" + std::string(name) + "'");
}

KernelRun draw_z_in(Precision precision, Kernel kernel, const Matrix<double>& theta, const Matrix<double>& phi,
                    const Documents& docs, const UniformSource& uniforms, const KernelOptions& options) {
  if (precision == Precision::double_precision) return draw_z(kernel, DrawInputs<double>{theta, phi, docs}, uniforms, options);
  const auto theta_f = theta.cast<float>();
  const auto phi_f = phi.cast<float>();
  return draw_z(kernel, DrawInputs<float>{theta_f, phi_f, docs}, uniforms, options);
}

}  // namespace bfly
