/* Copyright 2026 The mdmp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Managed buffers, communication regions and send/recv directives.
//
// A rank creates its buffers through a Runtime, opens a region, declares the
// directives of the region (optional, see Region::post_send) and then runs
// iterations:
//
//   auto region = rt.region_begin();
//   region.post_send(out, 0, n, peer);   // declaration: tracking starts here
//   for (...) {
//     region.iteration_begin();
//     ... out.write(i, f(in.read(i))) ...
//     region.post_send(out, 0, n, peer); // call site of this iteration
//     region.iteration_end();
//   }
//   RegionReport report = region.end();
//
// The first iteration is a profiling iteration: directives behave like plain
// non-blocking bulk messages at their call sites while every access to the
// communicated elements is counted. Later iterations use the recorded counts
// to send each element as soon as its last write has happened and to install
// each received element right after the last access to its old value.

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mdmp/error.hpp"
#include "mdmp/metrics.hpp"
#include "mdmp/transport.hpp"

namespace mdmp {

enum class ElemKind : std::uint8_t { Int32, Float32, Float64 };

std::string_view to_string(ElemKind k);
std::size_t elem_size(ElemKind k);

template <class T>
struct ElemTraits;
template <>
struct ElemTraits<std::int32_t> {
  static constexpr ElemKind kind = ElemKind::Int32;
};
template <>
struct ElemTraits<float> {
  static constexpr ElemKind kind = ElemKind::Float32;
};
template <>
struct ElemTraits<double> {
  static constexpr ElemKind kind = ElemKind::Float64;
};

enum class Mode : std::uint8_t { Passthrough, Profiling, Managed };
enum class ModeHint : std::uint8_t { Auto, Passthrough };
enum class ElemState : std::uint8_t { Pending, Triggered, Completed };
using Direction = LogDirection;

std::string_view to_string(Mode m);

/// Generic: every access is an out-of-line call that looks the buffer up by
/// id. Fast: the counter update is inlined into the caller.
enum class AccessPath : std::uint8_t { Generic, Fast };

/// MDMP_FAST_ACCESSORS=1 selects Fast, anything else Generic.
AccessPath default_access_path();

struct ChunkPolicy {
  std::size_t chunk = 1;  ///< consecutive ready elements per managed message
};

struct RuntimeOptions {
  AccessPath path = default_access_path();
  ChunkPolicy chunking;
  bool log_timestamps = false;
};

class Runtime;
template <class T>
class ManagedBuffer;

namespace detail {

inline constexpr std::uint8_t kGateCount = 1;
inline constexpr std::uint8_t kGateWatch = 2;

inline constexpr std::uint8_t kWatchWrite = 1;   // send trigger pending
inline constexpr std::uint8_t kWatchAccess = 2;  // receive install or landing pending

struct Slot;

struct TrackedSegment {
  std::size_t start = 0;
  std::size_t count = 0;
  std::vector<std::uint32_t> reads;
  std::vector<std::uint32_t> writes;
  std::vector<std::uint8_t> watch;
  std::vector<Slot*> owners;  // empty for ranges added with Runtime::track
  bool persistent = false;
};

struct BufferState {
  Runtime* rt = nullptr;
  std::uint64_t id = 0;
  ElemKind kind = ElemKind::Float32;
  std::size_t length = 0;
  std::byte* data = nullptr;
  const std::uint8_t* gate = nullptr;
  std::vector<TrackedSegment> segments;  // disjoint, sorted by start
};

[[noreturn]] void throw_out_of_bounds(const BufferState& st, std::size_t i);
[[noreturn]] void throw_counter_overflow(const BufferState& st, std::size_t i);

/// Full access through the communication engine: settles pending receive
/// state, performs the access, counts it, then fires any trigger it reached.
void hooked_access(BufferState& st, TrackedSegment& seg, std::size_t off, bool is_write,
                   void* value, std::size_t size);

inline void bump(BufferState& st, std::vector<std::uint32_t>& c, std::size_t off) {
  if (++c[off] == 0) {
    --c[off];
    throw_counter_overflow(st, off);
  }
}

template <class T>
inline T tracked_read(BufferState& st, TrackedSegment& seg, std::size_t off, std::size_t i) {
  if (seg.watch[off] & kWatchAccess) {
    T v;
    hooked_access(st, seg, off, false, &v, sizeof(T));
    return v;
  }
  if (*st.gate & kGateCount) bump(st, seg.reads, off);
  return reinterpret_cast<const T*>(st.data)[i];
}

template <class T>
inline void tracked_write(BufferState& st, TrackedSegment& seg, std::size_t off, std::size_t i,
                          T v) {
  if (seg.watch[off] != 0) {
    hooked_access(st, seg, off, true, &v, sizeof(T));
    return;
  }
  reinterpret_cast<T*>(st.data)[i] = v;
  if (*st.gate & kGateCount) bump(st, seg.writes, off);
}

}  // namespace detail

/// A rank-local typed array. Accesses through read/write inside an open
/// iteration of an active region are counted over tracked ranges; data() is
/// a raw view that bypasses tracking entirely.
///
/// The owning Runtime must outlive the buffer.
template <class T>
class ManagedBuffer {
 public:
  using value_type = T;

  ManagedBuffer() = default;
  ManagedBuffer(ManagedBuffer&& o) noexcept { *this = std::move(o); }
  ManagedBuffer& operator=(ManagedBuffer&& o) noexcept;
  ~ManagedBuffer();

  std::uint64_t id() const { return state_ ? state_->id : 0; }
  ElemKind kind() const { return ElemTraits<T>::kind; }
  std::size_t size() const { return storage_.size(); }
  bool fast_path() const { return fast_; }

  T read(std::size_t i);
  void write(std::size_t i, T v);

  T* data() { return storage_.data(); }
  const T* data() const { return storage_.data(); }
  std::span<const T> view() const { return storage_; }

  /// Counter values since the last iteration_begin; 0 for untracked indices.
  std::uint32_t reads(std::size_t i) const;
  std::uint32_t writes(std::size_t i) const;
  bool tracked(std::size_t i) const;
  /// Sum of every read and write counter over all tracked ranges.
  std::uint64_t counter_total() const;

  detail::BufferState* state() const { return state_.get(); }

 private:
  friend class Runtime;
  const detail::TrackedSegment* find(std::size_t i) const;

  Runtime* rt_ = nullptr;
  std::vector<T> storage_;
  std::unique_ptr<detail::BufferState> state_;
  bool fast_ = false;
};

using AnyBuffer =
    std::variant<ManagedBuffer<std::int32_t>, ManagedBuffer<float>, ManagedBuffer<double>>;

struct DirectiveId {
  std::size_t ordinal = 0;
  bool operator==(const DirectiveId&) const = default;
};

struct ReadinessProfile {
  std::size_t directive = 0;
  Direction direction = Direction::Send;
  std::vector<std::uint32_t> trigger_reads;   // receives only; zeros for sends
  std::vector<std::uint32_t> trigger_writes;
  std::vector<std::uint32_t> total_reads;     // counts at iteration end
  std::vector<std::uint32_t> total_writes;
  bool operator==(const ReadinessProfile&) const = default;
};

struct IterationRecord {
  std::uint64_t iteration = 0;  // 1-based
  Mode mode = Mode::Passthrough;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_received = 0;
  bool mismatch = false;
};

struct DemotionEvent {
  std::uint64_t iteration = 0;
  std::string reason;
};

struct RegionReport {
  std::uint64_t region_id = 0;
  int rank = 0;
  std::vector<IterationRecord> iterations;
  /// Every mode the region entered, in order, without consecutive repeats.
  std::vector<Mode> mode_sequence;
  std::vector<DemotionEvent> demotions;
  /// Profiles in force when the region ended (empty unless Managed).
  std::vector<ReadinessProfile> profiles;

  /// Header: region,rank,iteration,mode,msgs_sent,bytes_sent,msgs_recv,bytes_recv,mismatch
  void write_csv(std::ostream& os) const;
};

/// Handle to the active region of a Runtime.
class Region {
 public:
  Region() = default;

  std::uint64_t id() const { return id_; }
  bool active() const;
  Mode mode() const;
  /// Completed iterations.
  std::uint64_t iteration() const;

  void iteration_begin();
  void iteration_end();

  /// Before the first iteration_begin this declares the directive and starts
  /// tracking its range. Inside an iteration it marks the call site of the
  /// k-th directive of the region; a directive first seen inside an iteration
  /// is declared on the spot, and that iteration cannot serve as profile.
  template <class T>
  DirectiveId post_send(ManagedBuffer<T>& buf, std::size_t start, std::size_t count, int peer);
  template <class T>
  DirectiveId post_recv(ManagedBuffer<T>& buf, std::size_t start, std::size_t count, int peer);

  ElemState element_state(DirectiveId d, std::size_t i) const;
  std::optional<ReadinessProfile> profile(DirectiveId d) const;
  std::size_t directive_count() const;

  RegionReport end();

 private:
  friend class Runtime;
  Region(Runtime* rt, std::uint64_t id) : rt_(rt), id_(id) {}
  Runtime& check() const;

  Runtime* rt_ = nullptr;
  std::uint64_t id_ = 0;
};

/// One per rank context. Not thread-safe; all calls come from the rank that
/// owns the endpoint.
class Runtime {
 public:
  explicit Runtime(Endpoint& ep, RuntimeOptions opts = {});
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  int rank() const;
  Endpoint& endpoint();
  const RuntimeOptions& options() const;

  template <class T>
  ManagedBuffer<T> create_buffer(std::size_t n);
  AnyBuffer create_buffer(ElemKind kind, std::size_t n);

  Region region_begin(ModeHint hint = ModeHint::Auto);
  bool region_active() const;

  /// Tracks [start, start+count) without attaching a directive. Counters on
  /// such ranges move only inside an open iteration of an active region.
  template <class T>
  void track(ManagedBuffer<T>& buf, std::size_t start, std::size_t count);
  template <class T>
  void track(ManagedBuffer<T>& buf) {
    track(buf, 0, buf.size());
  }
  template <class T>
  void untrack(ManagedBuffer<T>& buf);

  const MessageLog& log() const;
  MessageLog take_log();

  template <class T>
  T generic_read(std::uint64_t id, std::size_t i);
  template <class T>
  void generic_write(std::uint64_t id, std::size_t i, T v);

  struct Impl;

 private:
  friend class Region;
  template <class T>
  friend class ManagedBuffer;
  friend void detail::hooked_access(detail::BufferState&, detail::TrackedSegment&, std::size_t,
                                    bool, void*, std::size_t);

  detail::BufferState& lookup(std::uint64_t id);
  std::unique_ptr<detail::BufferState> register_buffer(ElemKind kind, std::size_t n,
                                                       std::byte* data);
  void unregister_buffer(std::uint64_t id);
  void track_range(detail::BufferState& st, std::size_t start, std::size_t count);
  void untrack_all(detail::BufferState& st);
  DirectiveId post(Direction dir, detail::BufferState& st, std::size_t start, std::size_t count,
                   int peer);

  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------

template <class T>
ManagedBuffer<T>& ManagedBuffer<T>::operator=(ManagedBuffer&& o) noexcept {
  if (this == &o) return *this;
  if (rt_ && state_) rt_->unregister_buffer(state_->id);
  rt_ = o.rt_;
  storage_ = std::move(o.storage_);
  state_ = std::move(o.state_);
  fast_ = o.fast_;
  o.rt_ = nullptr;
  return *this;
}

template <class T>
ManagedBuffer<T>::~ManagedBuffer() {
  if (rt_ && state_) rt_->unregister_buffer(state_->id);
}

template <class T>
inline T ManagedBuffer<T>::read(std::size_t i) {
  if (!fast_) return rt_->template generic_read<T>(state_->id, i);
  detail::BufferState& st = *state_;
  if (i >= st.length) detail::throw_out_of_bounds(st, i);
  if (*st.gate != 0) {
    for (auto& seg : st.segments) {
      const std::size_t off = i - seg.start;
      if (off < seg.count) return detail::tracked_read<T>(st, seg, off, i);
    }
  }
  return storage_[i];
}

template <class T>
inline void ManagedBuffer<T>::write(std::size_t i, T v) {
  if (!fast_) return rt_->template generic_write<T>(state_->id, i, v);
  detail::BufferState& st = *state_;
  if (i >= st.length) detail::throw_out_of_bounds(st, i);
  if (*st.gate != 0) {
    for (auto& seg : st.segments) {
      const std::size_t off = i - seg.start;
      if (off < seg.count) return detail::tracked_write<T>(st, seg, off, i, v);
    }
  }
  storage_[i] = v;
}

template <class T>
const detail::TrackedSegment* ManagedBuffer<T>::find(std::size_t i) const {
  if (!state_) return nullptr;
  for (const auto& seg : state_->segments)
    if (i - seg.start < seg.count) return &seg;
  return nullptr;
}

template <class T>
std::uint32_t ManagedBuffer<T>::reads(std::size_t i) const {
  const auto* seg = find(i);
  return seg ? seg->reads[i - seg->start] : 0;
}

template <class T>
std::uint32_t ManagedBuffer<T>::writes(std::size_t i) const {
  const auto* seg = find(i);
  return seg ? seg->writes[i - seg->start] : 0;
}

template <class T>
bool ManagedBuffer<T>::tracked(std::size_t i) const {
  return find(i) != nullptr;
}

template <class T>
std::uint64_t ManagedBuffer<T>::counter_total() const {
  std::uint64_t total = 0;
  if (!state_) return 0;
  for (const auto& seg : state_->segments) {
    for (auto c : seg.reads) total += c;
    for (auto c : seg.writes) total += c;
  }
  return total;
}

template <class T>
ManagedBuffer<T> Runtime::create_buffer(std::size_t n) {
  ManagedBuffer<T> b;
  b.storage_.assign(n, T{});
  b.state_ = register_buffer(ElemTraits<T>::kind, n, reinterpret_cast<std::byte*>(b.storage_.data()));
  b.rt_ = this;
  b.fast_ = options().path == AccessPath::Fast;
  return b;
}

template <class T>
void Runtime::track(ManagedBuffer<T>& buf, std::size_t start, std::size_t count) {
  track_range(*buf.state(), start, count);
}

template <class T>
void Runtime::untrack(ManagedBuffer<T>& buf) {
  untrack_all(*buf.state());
}

template <class T>
DirectiveId Region::post_send(ManagedBuffer<T>& buf, std::size_t start, std::size_t count,
                              int peer) {
  return check().post(Direction::Send, *buf.state(), start, count, peer);
}

template <class T>
DirectiveId Region::post_recv(ManagedBuffer<T>& buf, std::size_t start, std::size_t count,
                              int peer) {
  return check().post(Direction::Recv, *buf.state(), start, count, peer);
}

extern template std::int32_t Runtime::generic_read<std::int32_t>(std::uint64_t, std::size_t);
extern template float Runtime::generic_read<float>(std::uint64_t, std::size_t);
extern template double Runtime::generic_read<double>(std::uint64_t, std::size_t);
extern template void Runtime::generic_write<std::int32_t>(std::uint64_t, std::size_t, std::int32_t);
extern template void Runtime::generic_write<float>(std::uint64_t, std::size_t, float);
extern template void Runtime::generic_write<double>(std::uint64_t, std::size_t, double);

namespace testing {

/// Overwrites the counters of a tracked element (overflow tests).
template <class T>
void set_counters(ManagedBuffer<T>& buf, std::size_t i, std::uint32_t reads, std::uint32_t writes) {
  for (auto& seg : buf.state()->segments) {
    if (i - seg.start < seg.count) {
      seg.reads[i - seg.start] = reads;
      seg.writes[i - seg.start] = writes;
      return;
    }
  }
  throw Error(Errc::RangeError, "index " + std::to_string(i) + " is not tracked");
}

}  // namespace testing

}  // namespace mdmp
