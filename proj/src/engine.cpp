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

#include "engine.hpp"

#include <algorithm>

#include "mdmp/wire.hpp"

namespace mdmp {

using detail::Slot;
using detail::TrackedSegment;

namespace {

bool overlaps(std::size_t a, std::size_t na, std::size_t b, std::size_t nb) {
  return na > 0 && nb > 0 && a < b + nb && b < a + na;
}

bool idle(const Slot& s) { return s.null_peer() || s.count == 0; }

ReadinessProfile blank_profile(const Slot& s) {
  ReadinessProfile p;
  p.directive = s.ordinal;
  p.direction = s.dir;
  p.trigger_reads.assign(s.count, 0);
  p.trigger_writes.assign(s.count, 0);
  p.total_reads.assign(s.count, 0);
  p.total_writes.assign(s.count, 0);
  return p;
}

std::string range_text(const Slot& s) {
  return std::string(to_string(s.dir)) + " directive " + std::to_string(s.ordinal);
}

}  // namespace

// ---------------------------------------------------------------------------
// Directives

Slot& Runtime::Impl::declare(Direction dir, detail::BufferState& st, std::size_t start,
                             std::size_t count, int peer) {
  if (start > st.length || count > st.length - start)
    throw Error(Errc::RangeError, "directive range [" + std::to_string(start) + ", +" +
                                      std::to_string(count) + ") outside buffer of length " +
                                      std::to_string(st.length));
  if (peer != NULL_RANK && (peer < 0 || peer >= ep.size()))
    throw Error(Errc::RangeError, "peer " + std::to_string(peer) + " is not a rank of this job");
  for (const auto& o : slots) {
    if (o->buf != &st || !overlaps(o->start, o->count, start, count)) continue;
    if (dir == Direction::Recv || o->dir == Direction::Recv)
      throw Error(Errc::OverlapConflict, "range overlaps " + range_text(*o));
  }

  auto s = std::make_unique<Slot>();
  s->ordinal = slots.size();
  s->dir = dir;
  s->buf = &st;
  s->start = start;
  s->count = count;
  s->peer = peer;
  s->esz = elem_size(st.kind);
  s->st.assign(count, idle(*s) ? ElemState::Completed : ElemState::Pending);
  s->staged = blank_profile(*s);
  if (dir == Direction::Recv) {
    s->staging.assign(count * s->esz, std::byte{0});
    s->arrived.assign(count, 0);
  }
  if (!idle(*s)) {
    auto& ord = ordinals[{peer, dir == Direction::Send ? 0 : 1}];
    s->tag = (region_seq << 32) | ord++;
    attach(*s);
  }
  slots.push_back(std::move(s));
  return *slots.back();
}

void Runtime::Impl::attach(Slot& s) {
  auto& segs = s.buf->segments;
  std::size_t lo = s.start, hi = s.start + s.count;
  std::vector<std::size_t> hit;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& g = segs[k];
    if (!overlaps(g.start, g.count, s.start, s.count)) continue;
    if (g.persistent)
      throw Error(Errc::OverlapConflict, "directive range overlaps a range added with track()");
    hit.push_back(k);
    lo = std::min(lo, g.start);
    hi = std::max(hi, g.start + g.count);
  }
  TrackedSegment seg;
  seg.start = lo;
  seg.count = hi - lo;
  seg.reads.assign(seg.count, 0);
  seg.writes.assign(seg.count, 0);
  seg.watch.assign(seg.count, 0);
  // Overlapping sends share one set of counters.
  for (std::size_t k : hit) {
    const auto& g = segs[k];
    std::copy(g.reads.begin(), g.reads.end(), seg.reads.begin() + (g.start - lo));
    std::copy(g.writes.begin(), g.writes.end(), seg.writes.begin() + (g.start - lo));
    std::copy(g.watch.begin(), g.watch.end(), seg.watch.begin() + (g.start - lo));
    seg.owners.insert(seg.owners.end(), g.owners.begin(), g.owners.end());
  }
  seg.owners.push_back(&s);
  for (auto it = hit.rbegin(); it != hit.rend(); ++it)
    segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(*it));
  auto pos = std::upper_bound(segs.begin(), segs.end(), lo,
                              [](std::size_t v, const TrackedSegment& g) { return v < g.start; });
  segs.insert(pos, std::move(seg));
}

void Runtime::Impl::detach_directive_segments() {
  for (auto& [id, st] : buffers)
    std::erase_if(st->segments, [](const TrackedSegment& g) { return !g.persistent; });
}

Slot& Runtime::Impl::slot_for(std::size_t ordinal) const {
  if (ordinal >= slots.size())
    throw Error(Errc::RangeError, "no directive " + std::to_string(ordinal) + " in this region");
  return *slots[ordinal];
}

TrackedSegment& Runtime::Impl::segment_of(const Slot& s) const {
  auto& segs = s.buf->segments;
  auto it = std::upper_bound(segs.begin(), segs.end(), s.start,
                             [](std::size_t v, const TrackedSegment& g) { return v < g.start; });
  return *std::prev(it);
}

std::uint32_t Runtime::Impl::reads_of(const Slot& s, std::size_t j) const {
  const auto& g = segment_of(s);
  return g.reads[s.start + j - g.start];
}

std::uint32_t Runtime::Impl::writes_of(const Slot& s, std::size_t j) const {
  const auto& g = segment_of(s);
  return g.writes[s.start + j - g.start];
}

void Runtime::Impl::set_watch(Slot& s, std::uint8_t bit, bool on) {
  auto& g = segment_of(s);
  auto* w = g.watch.data() + (s.start - g.start);
  for (std::size_t j = 0; j < s.count; ++j) w[j] = on ? (w[j] | bit) : (w[j] & ~bit);
}

void Runtime::Impl::flag(Slot& s, const std::string& why) {
  if (!s.mismatch) s.why = why;
  s.mismatch = true;
}

void Runtime::Impl::call_site(Slot& s) {
  s.posted = true;
  if (idle(s)) return;
  if (mode != Mode::Managed) {
    if (s.dir == Direction::Send) {
      if (mode == Mode::Profiling) {
        const auto& g = segment_of(s);
        for (std::size_t j = 0; j < s.count; ++j)
          s.staged.trigger_writes[j] = g.writes[s.start + j - g.start];
      }
      send_run(s, 0, s.count, MessageKind::Bulk);
    } else {
      s.pending = ep.irecv(s.peer, s.tag);
      s.armed = true;
      s.landed = false;
      set_watch(s, detail::kWatchAccess, true);
    }
    return;
  }
  if (s.dir == Direction::Send) {
    flush_run(s);
    const auto& g = segment_of(s);
    const auto& trig = s.profile->trigger_writes;
    for (std::size_t j = 0; j < s.count; ++j) {
      const auto w = g.writes[s.start + j - g.start];
      if (s.st[j] == ElemState::Pending)
        flag(s, "element " + std::to_string(j) + " of " + range_text(s) + " reached its call site after " +
                    std::to_string(w) + " of " + std::to_string(trig[j]) + " profiled writes");
      else if (w > trig[j])
        flag(s, "element " + std::to_string(j) + " of " + range_text(s) + " written after it was sent");
    }
    send_pending(s, MessageKind::SafetyNet);
  } else {
    poll_recv(s, false);
  }
}

// ---------------------------------------------------------------------------
// Iterations

void Runtime::Impl::begin_iteration() {
  if (iter_open) throw Error(Errc::Unbalanced, "iteration_begin called twice");
  if (mode == Mode::Passthrough && reprofile) {
    mode = Mode::Profiling;
    reprofile = false;
    report.mode_sequence.push_back(mode);
  }
  for (auto& [id, st] : buffers) {
    for (auto& g : st->segments) {
      std::fill(g.reads.begin(), g.reads.end(), 0);
      std::fill(g.writes.begin(), g.writes.end(), 0);
      std::fill(g.watch.begin(), g.watch.end(), 0);
    }
  }
  for (auto& sp : slots) {
    Slot& s = *sp;
    std::fill(s.st.begin(), s.st.end(), idle(s) ? ElemState::Completed : ElemState::Pending);
    s.posted = false;
    s.mismatch = false;
    s.why.clear();
    s.run_len = 0;
    s.sends.clear();
    s.send_log.clear();
    std::fill(s.arrived.begin(), s.arrived.end(), 0);
    s.received = 0;
    s.pending = CommHandle{};
    s.armed = false;
    s.landed = false;
    if (mode == Mode::Profiling) s.staged = blank_profile(s);
  }
  cur = IterationRecord{};
  cur.iteration = iteration + 1;
  cur.mode = mode;
  cursor = 0;
  incomplete = false;
  iter_open = true;
  gate = detail::kGateWatch | (mode == Mode::Passthrough ? 0 : detail::kGateCount);
  if (mode == Mode::Managed)
    for (auto& sp : slots) arm(*sp);
}

void Runtime::Impl::arm(Slot& s) {
  if (idle(s)) return;
  if (s.dir == Direction::Send) {
    set_watch(s, detail::kWatchWrite, true);
    const auto& trig = s.profile->trigger_writes;
    for (std::size_t j = 0; j < s.count; ++j)
      if (trig[j] == 0) trigger(s, j);
  } else {
    s.pending = ep.irecv(s.peer, s.tag);
    s.armed = true;
    set_watch(s, detail::kWatchAccess, true);
  }
}

void Runtime::Impl::end_iteration() {
  if (!iter_open) throw Error(Errc::Unbalanced, "iteration_end without iteration_begin");
  std::optional<Error> structural;
  if (cursor != slots.size())
    structural = Error(Errc::DirectiveMismatch,
                       "only " + std::to_string(cursor) + " of " + std::to_string(slots.size()) +
                           " directives reached their call site");
  try {
    drain();
  } catch (...) {
    gate = 0;
    iter_open = false;
    throw;
  }
  gate = 0;
  iter_open = false;
  ++iteration;

  std::string why;
  for (const auto& s : slots)
    if (s->mismatch && why.empty()) why = s->why;
  cur.mismatch = !why.empty();
  report.iterations.push_back(cur);

  if (mode == Mode::Managed && cur.mismatch) {
    mode = Mode::Passthrough;
    report.demotions.push_back(DemotionEvent{iteration, why});
    report.mode_sequence.push_back(mode);
    for (auto& s : slots) s->profile.reset();
    reprofile = hint == ModeHint::Auto;
  } else if (mode == Mode::Profiling && !incomplete && !structural) {
    for (auto& s : slots)
      if (!idle(*s)) s->profile = s->staged;
    mode = Mode::Managed;
    report.mode_sequence.push_back(mode);
  }
  frozen = true;
  if (structural) throw *structural;
}

void Runtime::Impl::drain() {
  for (auto& sp : slots) {
    Slot& s = *sp;
    if (idle(s)) continue;
    const auto& g = segment_of(s);
    const std::size_t base = s.start - g.start;

    if (s.dir == Direction::Send) {
      if (mode == Mode::Managed) {
        flush_run(s);
        if (!s.posted) {
          flag(s, range_text(s) + " never reached its call site");
          send_pending(s, MessageKind::SafetyNet);
        }
        for (std::size_t j = 0; j < s.count; ++j)
          if (g.writes[base + j] != s.profile->total_writes[j]) {
            flag(s, "element " + std::to_string(j) + " of " + range_text(s) + " written " +
                        std::to_string(g.writes[base + j]) + " times, profile has " +
                        std::to_string(s.profile->total_writes[j]));
            break;
          }
      }
      for (auto& h : s.sends) ep.wait(h);
      if (opts.log_timestamps) {
        const auto now = monotonic_ns();
        for (auto k : s.send_log) {
          log.entry(k).complete_ns = now;
        }
      }
      s.sends.clear();
      s.send_log.clear();
    } else {
      if (mode != Mode::Managed) {
        if (s.armed && !s.landed) land(s);
      } else {
        wait_all_elements(s);
        for (std::size_t j = 0; j < s.count; ++j)
          if (s.st[j] != ElemState::Completed) install(s, j);
        for (std::size_t j = 0; j < s.count; ++j)
          if (g.reads[base + j] != s.profile->total_reads[j] ||
              g.writes[base + j] != s.profile->total_writes[j]) {
            flag(s, "element " + std::to_string(j) + " of " + range_text(s) +
                        " accessed differently from its profile");
            break;
          }
      }
      set_watch(s, detail::kWatchAccess, false);
      s.armed = false;
      s.pending = CommHandle{};
    }
    if (mode == Mode::Profiling) {
      for (std::size_t j = 0; j < s.count; ++j) {
        s.staged.total_reads[j] = g.reads[base + j];
        s.staged.total_writes[j] = g.writes[base + j];
      }
    }
    std::fill(s.st.begin(), s.st.end(), ElemState::Completed);
  }
}

// ---------------------------------------------------------------------------
// Access hooks

void Runtime::Impl::before_access(detail::BufferState&, TrackedSegment& seg, std::size_t off,
                                  bool) {
  if (!(seg.watch[off] & detail::kWatchAccess)) return;
  const std::size_t i = seg.start + off;
  for (Slot* s : seg.owners) {
    if (s->dir != Direction::Recv || !s->contains(i)) continue;
    const std::size_t j = i - s->start;
    if (mode != Mode::Managed) {
      if (s->armed && !s->landed) land(*s);
    } else if (s->st[j] != ElemState::Completed &&
               seg.reads[off] >= s->profile->trigger_reads[j] &&
               seg.writes[off] >= s->profile->trigger_writes[j]) {
      // Due before this access: the access must see the new value.
      wait_element(*s, j);
      install(*s, j);
    }
  }
}

void Runtime::Impl::after_access(detail::BufferState&, TrackedSegment& seg, std::size_t off,
                                 bool is_write) {
  if (mode != Mode::Managed) return;
  const std::size_t i = seg.start + off;
  for (Slot* s : seg.owners) {
    if (!s->contains(i)) continue;
    const std::size_t j = i - s->start;
    if (s->dir == Direction::Send) {
      if (!is_write) continue;
      const auto trig = s->profile->trigger_writes[j];
      if (s->st[j] == ElemState::Pending) {
        if (seg.writes[off] == trig) trigger(*s, j);
      } else if (!s->posted && seg.writes[off] > trig) {
        flag(*s, "element " + std::to_string(j) + " of " + range_text(*s) + " written after it was sent");
      }
    } else if (s->st[j] != ElemState::Completed &&
               seg.reads[off] >= s->profile->trigger_reads[j] &&
               seg.writes[off] >= s->profile->trigger_writes[j]) {
      if (!s->arrived[j]) poll_recv(*s, false);
      if (s->arrived[j])
        install(*s, j);
      else
        s->st[j] = ElemState::Triggered;
    }
  }
}

// ---------------------------------------------------------------------------
// Messages

void Runtime::Impl::trigger(Slot& s, std::size_t j) {
  s.st[j] = ElemState::Triggered;
  if (s.run_len > 0 && j == s.run_start + s.run_len) {
    ++s.run_len;
  } else {
    flush_run(s);
    s.run_start = j;
    s.run_len = 1;
  }
  if (s.run_len >= opts.chunking.chunk) flush_run(s);
}

void Runtime::Impl::flush_run(Slot& s) {
  if (s.run_len == 0) return;
  send_run(s, s.run_start, s.run_len, MessageKind::Element);
  s.run_len = 0;
}

void Runtime::Impl::send_pending(Slot& s, MessageKind kind) {
  std::size_t j = 0;
  while (j < s.count) {
    if (s.st[j] != ElemState::Pending) {
      ++j;
      continue;
    }
    std::size_t k = j;
    while (k < s.count && s.st[k] == ElemState::Pending) s.st[k++] = ElemState::Triggered;
    send_run(s, j, k - j, kind);
    j = k;
  }
}

void Runtime::Impl::send_run(Slot& s, std::size_t off, std::size_t len, MessageKind kind) {
  const std::size_t bytes = len * s.esz;
  std::vector<std::byte> payload(detail::kChunkHeader + bytes);
  wire::put_u32(payload.data(), static_cast<std::uint32_t>(off));
  wire::put_u32(payload.data() + 4, static_cast<std::uint32_t>(len));
  wire::put_u32(payload.data() + 8, static_cast<std::uint32_t>(kind));
  std::memcpy(payload.data() + detail::kChunkHeader, s.buf->data + (s.start + off) * s.esz, bytes);
  s.sends.push_back(ep.isend(s.peer, s.tag, std::move(payload)));
  ++cur.messages_sent;
  cur.bytes_sent += bytes;

  LogEntry e;
  e.rank = ep.rank();
  e.region = region_seq;
  e.iteration = iteration + 1;
  e.direction = Direction::Send;
  e.peer = s.peer;
  e.tag = s.tag;
  e.kind = kind;
  e.offset = static_cast<std::uint32_t>(off);
  e.elements = static_cast<std::uint32_t>(len);
  e.bytes = bytes;
  if (opts.log_timestamps) {
    e.issue_ns = monotonic_ns();
    s.send_log.push_back(log.size());
  }
  log.append(e);
}

bool Runtime::Impl::poll_recv(Slot& s, bool block_one) {
  bool any = false;
  while (s.received < s.count) {
    if (!s.pending.valid()) s.pending = ep.irecv(s.peer, s.tag);
    if (block_one && !any)
      ep.wait(s.pending);
    else if (!ep.test(s.pending))
      break;
    auto payload = s.pending.take_payload();
    s.pending = CommHandle{};
    if (payload.size() < detail::kChunkHeader)
      throw Error(Errc::ProtocolError, "short message for " + range_text(s));
    const std::size_t off = wire::get_u32(payload.data());
    const std::size_t len = wire::get_u32(payload.data() + 4);
    const auto kind = static_cast<MessageKind>(wire::get_u32(payload.data() + 8));
    if (off + len > s.count || payload.size() != detail::kChunkHeader + len * s.esz)
      throw Error(Errc::LengthMismatch, "message [" + std::to_string(off) + ", +" +
                                            std::to_string(len) + ") does not fit " +
                                            range_text(s) + " of " + std::to_string(s.count) +
                                            " elements");
    for (std::size_t j = off; j < off + len; ++j) {
      if (s.arrived[j])
        throw Error(Errc::ProtocolError, "element " + std::to_string(j) + " of " + range_text(s) +
                                             " delivered twice in one iteration");
      s.arrived[j] = 1;
    }
    std::memcpy(s.staging.data() + off * s.esz, payload.data() + detail::kChunkHeader, len * s.esz);
    s.received += len;
    ++cur.messages_received;
    cur.bytes_received += len * s.esz;

    LogEntry e;
    e.rank = ep.rank();
    e.region = region_seq;
    e.iteration = iteration + 1;
    e.direction = Direction::Recv;
    e.peer = s.peer;
    e.tag = s.tag;
    e.kind = kind;
    e.offset = static_cast<std::uint32_t>(off);
    e.elements = static_cast<std::uint32_t>(len);
    e.bytes = len * s.esz;
    if (opts.log_timestamps) e.issue_ns = e.complete_ns = monotonic_ns();
    log.append(e);
    any = true;
  }
  return any;
}

void Runtime::Impl::wait_element(Slot& s, std::size_t j) {
  while (!s.arrived[j]) poll_recv(s, true);
}

void Runtime::Impl::wait_all_elements(Slot& s) {
  while (s.received < s.count) poll_recv(s, true);
}

void Runtime::Impl::land(Slot& s) {
  wait_all_elements(s);
  std::memcpy(s.buf->data + s.start * s.esz, s.staging.data(), s.count * s.esz);
  if (mode == Mode::Profiling) {
    const auto& g = segment_of(s);
    for (std::size_t j = 0; j < s.count; ++j) {
      s.staged.trigger_reads[j] = g.reads[s.start + j - g.start];
      s.staged.trigger_writes[j] = g.writes[s.start + j - g.start];
    }
  }
  set_watch(s, detail::kWatchAccess, false);
  s.landed = true;
  std::fill(s.st.begin(), s.st.end(), ElemState::Completed);
}

void Runtime::Impl::install(Slot& s, std::size_t j) {
  std::memcpy(s.buf->data + (s.start + j) * s.esz, s.staging.data() + j * s.esz, s.esz);
  s.st[j] = ElemState::Completed;
  auto& g = segment_of(s);
  g.watch[s.start + j - g.start] &= static_cast<std::uint8_t>(~detail::kWatchAccess);
}

}  // namespace mdmp
