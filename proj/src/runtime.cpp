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

#include <algorithm>
#include <cstdlib>
#include <ostream>

#include "engine.hpp"

namespace mdmp {

std::string_view to_string(ElemKind k) {
  switch (k) {
    case ElemKind::Int32: return "int32";
    case ElemKind::Float32: return "float32";
    case ElemKind::Float64: return "float64";
  }
  return "?";
}

std::size_t elem_size(ElemKind k) {
  switch (k) {
    case ElemKind::Int32: return 4;
    case ElemKind::Float32: return 4;
    case ElemKind::Float64: return 8;
  }
  return 0;
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Passthrough: return "passthrough";
    case Mode::Profiling: return "profiling";
    case Mode::Managed: return "managed";
  }
  return "?";
}

AccessPath default_access_path() {
  const char* v = std::getenv("MDMP_FAST_ACCESSORS");
  return v != nullptr && std::string_view(v) == "1" ? AccessPath::Fast : AccessPath::Generic;
}

void RegionReport::write_csv(std::ostream& os) const {
  os << "region,rank,iteration,mode,msgs_sent,bytes_sent,msgs_recv,bytes_recv,mismatch\n";
  for (const auto& r : iterations) {
    os << region_id << ',' << rank << ',' << r.iteration << ',' << to_string(r.mode) << ','
       << r.messages_sent << ',' << r.bytes_sent << ',' << r.messages_received << ','
       << r.bytes_received << ',' << (r.mismatch ? 1 : 0) << '\n';
  }
}

namespace detail {

void throw_out_of_bounds(const BufferState& st, std::size_t i) {
  throw Error(Errc::IndexOutOfBounds, "index " + std::to_string(i) + " outside buffer " +
                                          std::to_string(st.id) + " of length " +
                                          std::to_string(st.length));
}

void throw_counter_overflow(const BufferState& st, std::size_t i) {
  throw Error(Errc::CounterOverflow,
              "access counter saturated in buffer " + std::to_string(st.id) +
                  " (segment offset " + std::to_string(i) + ")");
}

void hooked_access(BufferState& st, TrackedSegment& seg, std::size_t off, bool is_write,
                   void* value, std::size_t size) {
  auto& impl = *st.rt->impl_;
  impl.before_access(st, seg, off, is_write);
  std::byte* p = st.data + (seg.start + off) * size;
  if (is_write)
    std::memcpy(p, value, size);
  else
    std::memcpy(value, p, size);
  if (*st.gate & kGateCount) bump(st, is_write ? seg.writes : seg.reads, off);
  impl.after_access(st, seg, off, is_write);
}

namespace {

TrackedSegment* find_segment(BufferState& st, std::size_t i) {
  auto it = std::upper_bound(st.segments.begin(), st.segments.end(), i,
                             [](std::size_t v, const TrackedSegment& s) { return v < s.start; });
  if (it == st.segments.begin()) return nullptr;
  --it;
  return i - it->start < it->count ? &*it : nullptr;
}

}  // namespace
}  // namespace detail

Runtime::Runtime(Endpoint& ep, RuntimeOptions opts)
    : impl_(std::make_unique<Impl>(*this, ep, opts)) {
  if (opts.chunking.chunk == 0) throw Error(Errc::ConfigError, "chunk must be at least 1");
}

Runtime::~Runtime() = default;

int Runtime::rank() const { return impl_->ep.rank(); }
Endpoint& Runtime::endpoint() { return impl_->ep; }
const RuntimeOptions& Runtime::options() const { return impl_->opts; }
const MessageLog& Runtime::log() const { return impl_->log; }
MessageLog Runtime::take_log() { return std::exchange(impl_->log, MessageLog{}); }
bool Runtime::region_active() const { return impl_->active; }

AnyBuffer Runtime::create_buffer(ElemKind kind, std::size_t n) {
  switch (kind) {
    case ElemKind::Int32: return create_buffer<std::int32_t>(n);
    case ElemKind::Float32: return create_buffer<float>(n);
    case ElemKind::Float64: return create_buffer<double>(n);
  }
  throw Error(Errc::ConfigError, "unknown element kind");
}

std::unique_ptr<detail::BufferState> Runtime::register_buffer(ElemKind kind, std::size_t n,
                                                              std::byte* data) {
  auto st = std::make_unique<detail::BufferState>();
  st->rt = this;
  st->id = impl_->next_buffer_id++;
  st->kind = kind;
  st->length = n;
  st->data = data;
  st->gate = &impl_->gate;
  impl_->buffers.emplace(st->id, st.get());
  return st;
}

void Runtime::unregister_buffer(std::uint64_t id) { impl_->buffers.erase(id); }

detail::BufferState& Runtime::lookup(std::uint64_t id) {
  auto it = impl_->buffers.find(id);
  if (it == impl_->buffers.end())
    throw Error(Errc::RangeError, "unknown buffer " + std::to_string(id));
  return *it->second;
}

template <class T>
[[gnu::noinline]] T Runtime::generic_read(std::uint64_t id, std::size_t i) {
  detail::BufferState& st = lookup(id);
  if (i >= st.length) detail::throw_out_of_bounds(st, i);
  if (*st.gate != 0) {
    if (auto* seg = detail::find_segment(st, i))
      return detail::tracked_read<T>(st, *seg, i - seg->start, i);
  }
  return reinterpret_cast<const T*>(st.data)[i];
}

template <class T>
[[gnu::noinline]] void Runtime::generic_write(std::uint64_t id, std::size_t i, T v) {
  detail::BufferState& st = lookup(id);
  if (i >= st.length) detail::throw_out_of_bounds(st, i);
  if (*st.gate != 0) {
    if (auto* seg = detail::find_segment(st, i))
      return detail::tracked_write<T>(st, *seg, i - seg->start, i, v);
  }
  reinterpret_cast<T*>(st.data)[i] = v;
}

template std::int32_t Runtime::generic_read<std::int32_t>(std::uint64_t, std::size_t);
template float Runtime::generic_read<float>(std::uint64_t, std::size_t);
template double Runtime::generic_read<double>(std::uint64_t, std::size_t);
template void Runtime::generic_write<std::int32_t>(std::uint64_t, std::size_t, std::int32_t);
template void Runtime::generic_write<float>(std::uint64_t, std::size_t, float);
template void Runtime::generic_write<double>(std::uint64_t, std::size_t, double);

void Runtime::track_range(detail::BufferState& st, std::size_t start, std::size_t count) {
  if (start > st.length || count > st.length - start)
    throw Error(Errc::RangeError, "track range [" + std::to_string(start) + ", +" +
                                      std::to_string(count) + ") outside buffer of length " +
                                      std::to_string(st.length));
  if (count == 0) return;
  for (const auto& seg : st.segments)
    if (seg.start < start + count && start < seg.start + seg.count)
      throw Error(Errc::OverlapConflict, "range overlaps an existing tracked range");
  detail::TrackedSegment seg;
  seg.start = start;
  seg.count = count;
  seg.reads.assign(count, 0);
  seg.writes.assign(count, 0);
  seg.watch.assign(count, 0);
  seg.persistent = true;
  auto pos = std::upper_bound(
      st.segments.begin(), st.segments.end(), start,
      [](std::size_t v, const detail::TrackedSegment& s) { return v < s.start; });
  st.segments.insert(pos, std::move(seg));
}

void Runtime::untrack_all(detail::BufferState& st) {
  std::erase_if(st.segments, [](const detail::TrackedSegment& s) { return s.persistent; });
}

Region Runtime::region_begin(ModeHint hint) {
  auto& im = *impl_;
  if (im.active) throw Error(Errc::NestedRegion, "a region is already active on this rank");
  im.active = true;
  ++im.region_seq;
  im.hint = hint;
  im.mode = hint == ModeHint::Auto ? Mode::Profiling : Mode::Passthrough;
  im.iter_open = false;
  im.iteration = 0;
  im.frozen = false;
  im.incomplete = false;
  im.reprofile = false;
  im.cursor = 0;
  im.slots.clear();
  im.ordinals.clear();
  im.report = RegionReport{};
  im.report.region_id = im.region_seq;
  im.report.rank = rank();
  im.report.mode_sequence.push_back(im.mode);
  return Region(this, im.region_seq);
}

DirectiveId Runtime::post(Direction dir, detail::BufferState& st, std::size_t start,
                          std::size_t count, int peer) {
  auto& im = *impl_;
  if (!im.iter_open) {
    if (im.iteration > 0)
      throw Error(Errc::DirectiveMismatch,
                  "directives can only be declared before the first iteration");
    return DirectiveId{im.declare(dir, st, start, count, peer).ordinal};
  }
  detail::Slot* s = nullptr;
  if (im.cursor < im.slots.size()) {
    s = im.slots[im.cursor].get();
    if (s->dir != dir || s->buf != &st || s->start != start || s->count != count ||
        s->peer != peer)
      throw Error(Errc::DirectiveMismatch,
                  "directive " + std::to_string(im.cursor) + " differs from its declaration (" +
                      std::string(to_string(s->dir)) + " of [" + std::to_string(s->start) +
                      ", +" + std::to_string(s->count) + ") with rank " +
                      std::to_string(s->peer) + ")");
  } else {
    if (im.frozen)
      throw Error(Errc::DirectiveMismatch,
                  "iteration posts more directives than the region declared (" +
                      std::to_string(im.slots.size()) + ")");
    s = &im.declare(dir, st, start, count, peer);
    im.incomplete = true;
  }
  ++im.cursor;
  im.call_site(*s);
  return DirectiveId{s->ordinal};
}

Runtime& Region::check() const {
  if (!active()) throw Error(Errc::InactiveRegion, "region " + std::to_string(id_) + " is not active");
  return *rt_;
}

bool Region::active() const {
  return rt_ != nullptr && rt_->impl_->active && rt_->impl_->region_seq == id_;
}

Mode Region::mode() const { return rt_->impl_->mode; }
std::uint64_t Region::iteration() const { return rt_->impl_->iteration; }

void Region::iteration_begin() { check().impl_->begin_iteration(); }
void Region::iteration_end() { check().impl_->end_iteration(); }

std::size_t Region::directive_count() const { return check().impl_->slots.size(); }

ElemState Region::element_state(DirectiveId d, std::size_t i) const {
  auto& s = check().impl_->slot_for(d.ordinal);
  if (i >= s.count) throw Error(Errc::RangeError, "element " + std::to_string(i) + " outside directive");
  return s.st[i];
}

std::optional<ReadinessProfile> Region::profile(DirectiveId d) const {
  return check().impl_->slot_for(d.ordinal).profile;
}

RegionReport Region::end() {
  auto& im = *check().impl_;
  if (im.iter_open) {
    for (const auto& s : im.slots) {
      if (s->null_peer() || s->count == 0) continue;
      if (s->posted || s->armed || !s->sends.empty())
        throw Error(Errc::PendingCommunication,
                    "directive " + std::to_string(s->ordinal) + " has undrained communication");
    }
    throw Error(Errc::OpenIteration, "iteration_end was not called");
  }
  for (const auto& s : im.slots)
    if (s->profile) im.report.profiles.push_back(*s->profile);
  im.detach_directive_segments();
  im.slots.clear();
  im.active = false;
  im.gate = 0;
  return std::exchange(im.report, RegionReport{});
}

}  // namespace mdmp
