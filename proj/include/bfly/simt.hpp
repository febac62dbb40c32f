#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bfly/error.hpp"
#include "bfly/matrix.hpp"

// Deterministic lockstep emulator of one SIMD warp. Lanes run sequentially
// inside each emulator step; everything issued in the same step counts as
// simultaneous for the coalescing model.
namespace bfly::simt {

inline constexpr int kMaxWidth = 64;

struct WarpConfig {
  int width = 32;      // W: power of two in [2, 64]
  int elem_size = 4;   // bytes per element (4 or 8)
  int line_size = 128; // bytes per memory transaction segment

  /// Throws InvalidConfig.
  void validate() const;
  int log2_width() const noexcept { return std::countr_zero(static_cast<unsigned>(width)); }
};

using LaneMask = std::uint64_t;

constexpr LaneMask full_mask(int width) noexcept {
  return width >= 64 ? ~LaneMask{0} : ((LaneMask{1} << width) - 1);
}

/// One value per lane (a "per-lane register").
template <class T>
class Lanes {
 public:
  explicit Lanes(int width, T fill = T{}) : width_(width) { values_.fill(fill); }

  int width() const noexcept { return width_; }
  T& operator[](int lane) noexcept { return values_[static_cast<std::size_t>(lane)]; }
  const T& operator[](int lane) const noexcept { return values_[static_cast<std::size_t>(lane)]; }

  std::span<T> values() noexcept { return {values_.data(), static_cast<std::size_t>(width_)}; }
  std::span<const T> values() const noexcept { return {values_.data(), static_cast<std::size_t>(width_)}; }

  friend bool operator==(const Lanes& a, const Lanes& b) {
    return a.width_ == b.width_ && std::equal(a.values().begin(), a.values().end(), b.values().begin());
  }

 private:
  std::array<T, kMaxWidth> values_;
  int width_;
};

template <class T, class F>
Lanes<T> lanewise(int width, F&& f) {
  Lanes<T> out(width);
  for (int r = 0; r < width; ++r) out[r] = f(r);
  return out;
}

enum class Space : std::uint8_t { global, local };
enum class Access : std::uint8_t { read, write };
enum class Phase : std::uint8_t { other, cache_remnant, cache_block, build, search };

std::string_view to_string(Space s) noexcept;
std::string_view to_string(Access a) noexcept;
std::string_view to_string(Phase p) noexcept;

struct MemoryEvent {
  std::uint64_t step = 0;
  Space space = Space::global;
  Access kind = Access::read;
  Phase phase = Phase::other;
  std::string array;
  int active_lanes = 0;
  int transactions = 0;
  // Addresses neither lane-uniform nor consecutive in lane order.
  bool scattered = false;
};

struct AccessKey {
  std::string array;
  Phase phase;
  Space space;
  Access kind;
  auto operator<=>(const AccessKey&) const = default;
};

struct AccessStats {
  std::uint64_t accesses = 0;
  std::uint64_t transactions = 0;
  std::uint64_t scattered = 0;
  int min_transactions = 0;
  int max_transactions = 0;

  void add(const AccessStats& other);
};

struct OpCounts {
  std::uint64_t shuffles = 0;      // broadcast / indexed shuffle
  std::uint64_t shuffle_xors = 0;
  std::uint64_t votes = 0;
  std::uint64_t adds = 0;          // additions and subtractions
  std::uint64_t muls = 0;

  void add(const OpCounts& other);
};

/// Per-warp recorder. Aggregates always; keeps the raw event log on request.
class TraceRecorder {
 public:
  explicit TraceRecorder(bool keep_events = false) : keep_events_(keep_events) {}

  void record(MemoryEvent event);
  OpCounts& ops(Phase phase) { return ops_[phase]; }

  bool keeps_events() const noexcept { return keep_events_; }
  const std::vector<MemoryEvent>& events() const noexcept { return events_; }
  const std::map<AccessKey, AccessStats>& access_stats() const noexcept { return stats_; }
  const std::map<Phase, OpCounts>& phase_ops() const noexcept { return ops_; }

  OpCounts total_ops() const;
  /// Sums stats over every key matching the filter fields that are set.
  AccessStats sum_access(const std::string* array, const Phase* phase, const Space* space,
                         const Access* kind) const;

  /// Appends another recorder; event steps are offset to stay monotone.
  void merge(const TraceRecorder& other);

  /// Columns: step,space,kind,active_lanes,transactions
  void write_csv(std::ostream& out) const;

 private:
  bool keep_events_;
  std::uint64_t max_step_ = 0;
  std::vector<MemoryEvent> events_;
  std::map<AccessKey, AccessStats> stats_;
  std::map<Phase, OpCounts> ops_;
};

/// Bump allocator for simulated addresses; every block starts on a line.
class AddressSpace {
 public:
  explicit AddressSpace(int line_size, std::uint64_t origin = 0) : line_(line_size), next_(origin) {}
  std::uint64_t allocate(std::uint64_t bytes);

 private:
  std::uint64_t line_;
  std::uint64_t next_;
};

enum class GlobalLayout : std::uint8_t {
  dense,         // address(i,j) = base + (i*cols + j)*elem
  block_aligned, // rows padded in front so every W-wide topic block starts W-aligned
};

/// Row-major global matrix. With the dense layout pitch == cols and lead == 0.
template <class T>
class GlobalArray2D {
 public:
  GlobalArray2D(std::string name, const Matrix<T>& values, AddressSpace& space, const WarpConfig& cfg,
                GlobalLayout layout = GlobalLayout::dense)
      : name_(std::move(name)), values_(values), elem_(static_cast<std::uint64_t>(cfg.elem_size)) {
    const std::size_t cols = values.cols();
    if (layout == GlobalLayout::block_aligned) {
      const auto w = static_cast<std::size_t>(cfg.width);
      lead_ = (w - cols % w) % w;
      pitch_ = (lead_ + cols + w - 1) / w * w;
    } else {
      lead_ = 0;
      pitch_ = cols;
    }
    base_ = space.allocate(std::max<std::uint64_t>(1, values.rows() * pitch_ * elem_));
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }
  std::size_t pitch() const noexcept { return pitch_; }
  std::size_t lead() const noexcept { return lead_; }
  std::uint64_t base() const noexcept { return base_; }

  bool in_bounds(long i, long j) const noexcept {
    return i >= 0 && j >= 0 && static_cast<std::size_t>(i) < rows() && static_cast<std::size_t>(j) < cols();
  }
  std::uint64_t address(std::size_t i, std::size_t j) const noexcept {
    return base_ + (i * pitch_ + lead_ + j) * elem_;
  }
  const T& at(std::size_t i, std::size_t j) const noexcept { return values_(i, j); }
  T& at(std::size_t i, std::size_t j) noexcept { return values_(i, j); }
  const Matrix<T>& values() const noexcept { return values_; }

 private:
  std::string name_;
  Matrix<T> values_;
  std::uint64_t elem_;
  std::size_t pitch_ = 0;
  std::size_t lead_ = 0;
  std::uint64_t base_ = 0;
};

/// Per-lane array of length L stored interleaved across lanes:
/// address(lane r, index j) = base + (j*W + r)*elem.
template <class T>
class LocalArray {
 public:
  LocalArray(std::string name, int width, std::size_t length, AddressSpace& space, int elem_size)
      : name_(std::move(name)),
        width_(width),
        length_(length),
        elem_(static_cast<std::uint64_t>(elem_size)),
        data_(length * static_cast<std::size_t>(width)) {
    base_ = space.allocate(std::max<std::uint64_t>(1, data_.size() * elem_));
  }

  const std::string& name() const noexcept { return name_; }
  int width() const noexcept { return width_; }
  std::size_t length() const noexcept { return length_; }
  std::uint64_t base() const noexcept { return base_; }

  std::uint64_t address(int lane, std::size_t index) const noexcept {
    return base_ + (index * static_cast<std::size_t>(width_) + static_cast<std::size_t>(lane)) * elem_;
  }
  // Untraced access for verification code.
  T& at(int lane, std::size_t index) noexcept { return data_[index * static_cast<std::size_t>(width_) + static_cast<std::size_t>(lane)]; }
  const T& at(int lane, std::size_t index) const noexcept {
    return data_[index * static_cast<std::size_t>(width_) + static_cast<std::size_t>(lane)];
  }

 private:
  std::string name_;
  int width_;
  std::size_t length_;
  std::uint64_t elem_;
  std::uint64_t base_ = 0;
  std::vector<T> data_;
};

/// Per-lane array kept in registers: never generates memory traffic.
template <class T>
class RegisterArray {
 public:
  RegisterArray(int width, std::size_t length) : slots_(length, Lanes<T>(width)) {}
  std::size_t length() const noexcept { return slots_.size(); }
  Lanes<T>& operator[](std::size_t index) { return slots_[index]; }
  const Lanes<T>& operator[](std::size_t index) const { return slots_[index]; }

 private:
  std::vector<Lanes<T>> slots_;
};

class Warp {
 public:
  explicit Warp(WarpConfig config, TraceRecorder* trace = nullptr);

  const WarpConfig& config() const noexcept { return config_; }
  int width() const noexcept { return config_.width; }
  Lanes<int> lane_ids() const { return lanewise<int>(width(), [](int r) { return r; }); }

  LaneMask active() const noexcept { return active_; }
  void set_active(LaneMask mask) noexcept { active_ = mask & full_mask(width()); }
  bool is_active(int lane) const noexcept { return (active_ >> lane) & 1U; }

  Phase phase() const noexcept { return phase_; }
  void set_phase(Phase p) noexcept { phase_ = p; }
  std::uint64_t step() const noexcept { return step_; }
  TraceRecorder* trace() const noexcept { return trace_; }
  AddressSpace& local_space() noexcept { return local_space_; }

  // -- collectives ---------------------------------------------------------

  /// Every lane receives the value held by lane `src` (its own operand).
  template <class T>
  Lanes<T> shuffle(const Lanes<T>& v, const Lanes<int>& src) {
    Lanes<T> out(width());
    for (int r = 0; r < width(); ++r) {
      if (src[r] < 0 || src[r] >= width())
        throw Error(ErrorCode::LaneOutOfRange, "shuffle source " + std::to_string(src[r]) + " on lane " + std::to_string(r));
      out[r] = v[src[r]];
    }
    note_op(&OpCounts::shuffles);
    return out;
  }
  template <class T>
  Lanes<T> shuffle(const Lanes<T>& v, int src) {
    return shuffle(v, Lanes<int>(width(), src));
  }

  /// Lane r receives the value held by lane r ^ mask.
  template <class T>
  Lanes<T> shuffle_xor(const Lanes<T>& v, const Lanes<int>& mask) {
    Lanes<T> out(width());
    for (int r = 0; r < width(); ++r) {
      if (mask[r] < 0 || mask[r] >= width())
        throw Error(ErrorCode::MaskOutOfRange, "shuffle_xor mask " + std::to_string(mask[r]) + " on lane " + std::to_string(r));
      out[r] = v[r ^ mask[r]];
    }
    note_op(&OpCounts::shuffle_xors);
    return out;
  }
  template <class T>
  Lanes<T> shuffle_xor(const Lanes<T>& v, int mask) {
    return shuffle_xor(v, Lanes<int>(width(), mask));
  }

  /// True iff some active lane's predicate holds; uniform across lanes.
  bool any(const Lanes<bool>& pred);

  // -- arithmetic (counted per warp instruction) ---------------------------

  template <class T>
  Lanes<T> add(const Lanes<T>& a, const Lanes<T>& b) {
    count(&OpCounts::adds);
    return lanewise<T>(width(), [&](int r) { return static_cast<T>(a[r] + b[r]); });
  }
  template <class T>
  Lanes<T> sub(const Lanes<T>& a, const Lanes<T>& b) {
    count(&OpCounts::adds);
    return lanewise<T>(width(), [&](int r) { return static_cast<T>(a[r] - b[r]); });
  }
  template <class T>
  Lanes<T> mul(const Lanes<T>& a, const Lanes<T>& b) {
    count(&OpCounts::muls);
    return lanewise<T>(width(), [&](int r) { return static_cast<T>(a[r] * b[r]); });
  }

  // -- traced memory -------------------------------------------------------

  /// Records one simultaneous access; inactive lanes contribute no address.
  MemoryEvent traced_access(Space space, const Lanes<std::uint64_t>& addresses, Access kind,
                            const std::string& array);

  template <class T>
  Lanes<T> load(const GlobalArray2D<T>& g, const Lanes<int>& row, const Lanes<int>& col) {
    Lanes<T> out(width());
    Lanes<std::uint64_t> addr(width());
    for (int r = 0; r < width(); ++r) {
      if (!is_active(r)) continue;
      check_bounds(g.in_bounds(row[r], col[r]), g.name(), r);
      addr[r] = g.address(static_cast<std::size_t>(row[r]), static_cast<std::size_t>(col[r]));
      out[r] = g.at(static_cast<std::size_t>(row[r]), static_cast<std::size_t>(col[r]));
    }
    traced_access(Space::global, addr, Access::read, g.name());
    return out;
  }

  template <class T>
  void store(GlobalArray2D<T>& g, const Lanes<int>& row, const Lanes<int>& col, const Lanes<T>& v) {
    Lanes<std::uint64_t> addr(width());
    for (int r = 0; r < width(); ++r) {
      if (!is_active(r)) continue;
      check_bounds(g.in_bounds(row[r], col[r]), g.name(), r);
      addr[r] = g.address(static_cast<std::size_t>(row[r]), static_cast<std::size_t>(col[r]));
      g.at(static_cast<std::size_t>(row[r]), static_cast<std::size_t>(col[r])) = v[r];
    }
    traced_access(Space::global, addr, Access::write, g.name());
  }

  /// Lane r reads element index[r] of the array owned by lane owner[r].
  template <class T>
  Lanes<T> load(const LocalArray<T>& a, const Lanes<int>& owner, const Lanes<int>& index) {
    Lanes<T> out(width());
    Lanes<std::uint64_t> addr(width());
    for (int r = 0; r < width(); ++r) {
      if (!is_active(r)) continue;
      check_local(a, owner[r], index[r], r);
      addr[r] = a.address(owner[r], static_cast<std::size_t>(index[r]));
      out[r] = a.at(owner[r], static_cast<std::size_t>(index[r]));
    }
    traced_access(Space::local, addr, Access::read, a.name());
    return out;
  }
  template <class T>
  Lanes<T> load(const LocalArray<T>& a, const Lanes<int>& index) {
    return load(a, lane_ids(), index);
  }
  template <class T>
  Lanes<T> load(const LocalArray<T>& a, int index) {
    return load(a, lane_ids(), Lanes<int>(width(), index));
  }

  template <class T>
  void store(LocalArray<T>& a, const Lanes<int>& owner, const Lanes<int>& index, const Lanes<T>& v) {
    Lanes<std::uint64_t> addr(width());
    for (int r = 0; r < width(); ++r) {
      if (!is_active(r)) continue;
      check_local(a, owner[r], index[r], r);
      addr[r] = a.address(owner[r], static_cast<std::size_t>(index[r]));
      a.at(owner[r], static_cast<std::size_t>(index[r])) = v[r];
    }
    traced_access(Space::local, addr, Access::write, a.name());
  }
  template <class T>
  void store(LocalArray<T>& a, const Lanes<int>& index, const Lanes<T>& v) {
    store(a, lane_ids(), index, v);
  }
  template <class T>
  void store(LocalArray<T>& a, int index, const Lanes<T>& v) {
    store(a, lane_ids(), Lanes<int>(width(), index), v);
  }

 private:
  void note_op(std::uint64_t OpCounts::*field);
  void count(std::uint64_t OpCounts::*field);
  static void check_bounds(bool ok, const std::string& array, int lane);
  template <class T>
  static void check_local(const LocalArray<T>& a, int owner, int index, int lane) {
    check_bounds(owner >= 0 && owner < a.width() && index >= 0 && static_cast<std::size_t>(index) < a.length(),
                 a.name(), lane);
  }

  WarpConfig config_;
  TraceRecorder* trace_;
  AddressSpace local_space_;
  LaneMask active_;
  Phase phase_ = Phase::other;
  std::uint64_t step_ = 0;
};

/// Sets the warp's phase tag for the lifetime of the guard.
class PhaseScope {
 public:
  PhaseScope(Warp& warp, Phase phase) : warp_(warp), saved_(warp.phase()) { warp.set_phase(phase); }
  ~PhaseScope() { warp_.set_phase(saved_); }
  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

 private:
  Warp& warp_;
  Phase saved_;
};

/// Sets the active mask for the lifetime of the guard.
class Predicate {
 public:
  Predicate(Warp& warp, LaneMask mask) : warp_(warp), saved_(warp.active()) { warp.set_active(mask & saved_); }
  ~Predicate() { warp_.set_active(saved_); }
  Predicate(const Predicate&) = delete;
  Predicate& operator=(const Predicate&) = delete;

 private:
  Warp& warp_;
  LaneMask saved_;
};

/// Number of distinct line-sized segments covering the given addresses.
int count_transactions(std::span<const std::uint64_t> addresses, int line_size);

}  // namespace bfly::simt
