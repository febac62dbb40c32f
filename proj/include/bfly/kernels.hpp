#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "bfly/matrix.hpp"
#include "bfly/simt.hpp"

// The three z-drawing kernels of an uncollapsed LDA Gibbs sweep: a plain
// reference, a transposed-access warp kernel, and the butterfly warp kernel.
namespace bfly {

enum class Kernel : std::uint8_t { basic, transposed, butterfly };

std::string_view to_string(Kernel k) noexcept;
/// Throws InvalidConfig for unknown names.
Kernel parse_kernel(std::string_view name);

using Documents = std::vector<std::vector<int>>;
using ZMatrix = std::vector<std::vector<int>>;

template <class Real>
struct DrawInputs {
  const Matrix<Real>& theta;  // M x K
  const Matrix<Real>& phi;    // V x K
  const Documents& docs;      // M ragged word-id rows
};

/// Source of the uniform u behind each draw, stop = total * u.
class UniformSource {
 public:
  virtual ~UniformSource() = default;
  /// `step` is the master-index iteration that performs the draw (equal to
  /// `word` except for the repeated final draws of short documents).
  virtual double unit(std::size_t doc, std::size_t word, std::uint64_t step) const = 0;
};

/// Counter-based stream: u = hash(seed, doc, step). doc = q*W + r, so this is
/// a per-(warp, lane, iteration) stream for any warp width.
class HashedUniforms final : public UniformSource {
 public:
  explicit HashedUniforms(std::uint64_t seed) : seed_(seed) {}
  double unit(std::size_t doc, std::size_t word, std::uint64_t step) const override;

 private:
  std::uint64_t seed_;
};

/// Pre-drawn values consumed in (doc, word) order; repeated draws of the same
/// word reuse its value. This makes kernels comparable draw for draw.
class InjectedUniforms final : public UniformSource {
 public:
  /// Throws InvalidConfig unless values.size() equals the token count and
  /// every value lies in [0, 1).
  InjectedUniforms(const Documents& docs, std::vector<double> values);
  /// Fills every token slot from a seeded stream.
  static InjectedUniforms generate(const Documents& docs, std::uint64_t seed);

  double unit(std::size_t doc, std::size_t word, std::uint64_t step) const override;
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

struct KernelOptions {
  simt::WarpConfig warp{};
  simt::GlobalLayout layout = simt::GlobalLayout::block_aligned;
  unsigned threads = 1;
  bool keep_events = false;
  /// Observer for every lane draw on a real document (doc, word, step, topic).
  /// Invoked from worker threads when threads > 1.
  std::function<void(std::size_t, std::size_t, std::uint64_t, int)> on_draw;
};

struct KernelRun {
  ZMatrix z;
  simt::TraceRecorder trace;
  std::uint64_t warp_steps = 0;  // master-index iterations summed over warps
  std::uint64_t lane_draws = 0;  // warp_steps * W for warp kernels, tokens for basic
  std::vector<std::uint64_t> steps_per_group;
};

/// Throws InvalidConfig / WordIdOutOfRange on inconsistent shapes.
template <class Real>
void validate_inputs(const DrawInputs<Real>& in);

/// Reference: per token, products, sequential prefix sums, binary search.
template <class Real>
ZMatrix draw_z_basic(const DrawInputs<Real>& in, const UniformSource& uniforms);

/// M must be a multiple of W (pad upstream with empty documents).
template <class Real>
KernelRun draw_z_transposed(const DrawInputs<Real>& in, const UniformSource& uniforms, const KernelOptions& options);

template <class Real>
KernelRun draw_z_butterfly(const DrawInputs<Real>& in, const UniformSource& uniforms, const KernelOptions& options);

template <class Real>
KernelRun draw_z(Kernel kernel, const DrawInputs<Real>& in, const UniformSource& uniforms,
                 const KernelOptions& options);

/// Runs fn(group) for every group on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

enum class Precision : std::uint8_t { single, double_precision };

std::string_view to_string(Precision p) noexcept;
/// Accepts "single" / "double"; throws InvalidConfig otherwise.
Precision parse_precision(std::string_view name);

/// Runs `kernel` on double-precision model matrices, converting them to float
/// first when `precision` is single.
KernelRun draw_z_in(Precision precision, Kernel kernel, const Matrix<double>& theta, const Matrix<double>& phi,
                    const Documents& docs, const UniformSource& uniforms, const KernelOptions& options);

}  // namespace bfly
