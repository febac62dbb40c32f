#include "bfly/simt.hpp"

#include <limits>

namespace bfly::simt {

void WarpConfig::validate() const {
  if (width < 2 || width > kMaxWidth || !std::has_single_bit(static_cast<unsigned>(width)))
    throw Error(ErrorCode::InvalidConfig, "warp width must be a power of two in [2, 64], got " + std::to_string(width));
  if (elem_size != 4 && elem_size != 8)
    throw Error(ErrorCode::InvalidConfig, "element size must be 4 or 8 bytes, got " + std::to_string(elem_size));
  if (line_size < elem_size || !std::has_single_bit(static_cast<unsigned>(line_size)))
    throw Error(ErrorCode::InvalidConfig,
                "line size must be a power-of-two multiple of the element size, got " + std::to_string(line_size));
}

std::string_view to_string(Space s) noexcept { return s == Space::global ? "global" : "local"; }
std::string_view to_string(Access a) noexcept { return a == Access::read ? "read" : "write"; }
std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::other: return "other";
    case Phase::cache_remnant: return "cache_remnant";
    case Phase::cache_block: return "cache_block";
    case Phase::build: return "build";
    case Phase::search: return "search";
  }
  return "other";
}

void AccessStats::add(const AccessStats& other) {
  if (other.accesses == 0) return;
  if (accesses == 0) {
    min_transactions = other.min_transactions;
    max_transactions = other.max_transactions;
  } else {
    min_transactions = std::min(min_transactions, other.min_transactions);
    max_transactions = std::max(max_transactions, other.max_transactions);
  }
  accesses += other.accesses;
  transactions += other.transactions;
  scattered += other.scattered;
}

void OpCounts::add(const OpCounts& other) {
  shuffles += other.shuffles;
  shuffle_xors += other.shuffle_xors;
  votes += other.votes;
  adds += other.adds;
  muls += other.muls;
}

void TraceRecorder::record(MemoryEvent event) {
  max_step_ = std::max(max_step_, event.step);
  AccessStats one;
  one.accesses = 1;
  one.transactions = static_cast<std::uint64_t>(event.transactions);
  one.scattered = event.scattered ? 1 : 0;
  one.min_transactions = one.max_transactions = event.transactions;
  stats_[AccessKey{event.array, event.phase, event.space, event.kind}].add(one);
  if (keep_events_) events_.push_back(std::move(event));
}

OpCounts TraceRecorder::total_ops() const {
  OpCounts total;
  for (const auto& [phase, ops] : ops_) total.add(ops);
  return total;
}

AccessStats TraceRecorder::sum_access(const std::string* array, const Phase* phase, const Space* space,
                                      const Access* kind) const {
  AccessStats total;
  for (const auto& [key, stats] : stats_) {
    if (array && key.array != *array) continue;
    if (phase && key.phase != *phase) continue;
    if (space && key.space != *space) continue;
    if (kind && key.kind != *kind) continue;
    total.add(stats);
  }
  return total;
}

void TraceRecorder::merge(const TraceRecorder& other) {
  const std::uint64_t offset = max_step_;
  for (const auto& [key, stats] : other.stats_) stats_[key].add(stats);
  for (const auto& [phase, ops] : other.ops_) ops_[phase].add(ops);
  if (keep_events_) {
    for (MemoryEvent ev : other.events_) {
      ev.step += offset;
      events_.push_back(std::move(ev));
    }
  }
  max_step_ = offset + other.max_step_;
}

void TraceRecorder::write_csv(std::ostream& out) const {
  out << "step,space,kind,active_lanes,transactions\n";
  for (const auto& ev : events_) {
    out << ev.step << ',' << to_string(ev.space) << ',' << to_string(ev.kind) << ',' << ev.active_lanes << ','
        << ev.transactions << '\n';
  }
}

std::uint64_t AddressSpace::allocate(std::uint64_t bytes) {
  const std::uint64_t base = (next_ + line_ - 1) / line_ * line_;
  next_ = base + bytes;
  return base;
}

int count_transactions(std::span<const std::uint64_t> addresses, int line_size) {
  std::array<std::uint64_t, kMaxWidth> lines{};
  std::size_t n = 0;
  for (std::uint64_t a : addresses) lines[n++] = a / static_cast<std::uint64_t>(line_size);
  std::sort(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(n));
  return static_cast<int>(std::unique(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(n)) - lines.begin());
}

Warp::Warp(WarpConfig config, TraceRecorder* trace)
    : config_(config), trace_(trace), local_space_(config.line_size), active_(full_mask(config.width)) {
  config_.validate();
}

bool Warp::any(const Lanes<bool>& pred) {
  note_op(&OpCounts::votes);
  for (int r = 0; r < width(); ++r)
    if (is_active(r) && pred[r]) return true;
  return false;
}

MemoryEvent Warp::traced_access(Space space, const Lanes<std::uint64_t>& addresses, Access kind,
                                const std::string& array) {
  ++step_;
  std::array<std::uint64_t, kMaxWidth> active{};
  std::size_t n = 0;
  for (int r = 0; r < width(); ++r)
    if (is_active(r)) active[n++] = addresses[r];

  MemoryEvent ev;
  ev.step = step_;
  ev.space = space;
  ev.kind = kind;
  ev.phase = phase_;
  ev.active_lanes = static_cast<int>(n);
  ev.transactions = count_transactions({active.data(), n}, config_.line_size);
  bool uniform = true;
  bool consecutive = true;
  const auto elem = static_cast<std::uint64_t>(config_.elem_size);
  for (std::size_t i = 1; i < n; ++i) {
    uniform = uniform && active[i] == active[0];
    consecutive = consecutive && active[i] == active[i - 1] + elem;
  }
  ev.scattered = n > 1 && !uniform && !consecutive;
  ev.array = array;
  if (trace_) trace_->record(ev);
  return ev;
}

void Warp::note_op(std::uint64_t OpCounts::*field) {
  ++step_;
  count(field);
}

void Warp::count(std::uint64_t OpCounts::*field) {
  if (trace_) ++(trace_->ops(phase_).*field);
}

void Warp::check_bounds(bool ok, const std::string& array, int lane) {
  if (!ok) throw Error(ErrorCode::OutOfBounds, "access to " + array + " out of bounds on lane " + std::to_string(lane));
}

}  // namespace bfly::simt
