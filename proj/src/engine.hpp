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

#pragma once

#include <map>
#include <unordered_map>

#include "mdmp/runtime.hpp"

namespace mdmp {
namespace detail {

/// Every message a directive carries starts with this header, so a receiver
/// can accept any split of the range into messages.
inline constexpr std::size_t kChunkHeader = 12;  // u32 offset, u32 count, u32 kind

struct Slot {
  std::size_t ordinal = 0;
  Direction dir = Direction::Send;
  BufferState* buf = nullptr;
  std::size_t start = 0;
  std::size_t count = 0;
  int peer = NULL_RANK;
  Tag tag = 0;
  std::size_t esz = 0;

  std::optional<ReadinessProfile> profile;  // committed
  ReadinessProfile staged;                  // being recorded

  // Per iteration.
  std::vector<ElemState> st;
  bool posted = false;
  bool mismatch = false;
  std::string why;

  // Send side.
  std::size_t run_start = 0;
  std::size_t run_len = 0;
  std::vector<CommHandle> sends;
  std::vector<std::size_t> send_log;  // log entries awaiting completion time

  // Receive side.
  std::vector<std::byte> staging;
  std::vector<std::uint8_t> arrived;
  std::size_t received = 0;
  CommHandle pending;
  bool armed = false;   // receive posted for this iteration
  bool landed = false;  // bulk data copied into the buffer

  bool null_peer() const { return peer == NULL_RANK; }
  bool contains(std::size_t i) const { return i - start < count; }
};

}  // namespace detail

struct Runtime::Impl {
  Impl(Runtime& r, Endpoint& e, RuntimeOptions o) : rt(r), ep(e), opts(o) {}

  Runtime& rt;
  Endpoint& ep;
  RuntimeOptions opts;
  std::uint8_t gate = 0;

  std::unordered_map<std::uint64_t, detail::BufferState*> buffers;
  std::uint64_t next_buffer_id = 1;

  // Region state.
  bool active = false;
  std::uint64_t region_seq = 0;
  ModeHint hint = ModeHint::Auto;
  Mode mode = Mode::Passthrough;
  bool iter_open = false;
  std::uint64_t iteration = 0;  // completed iterations
  bool frozen = false;          // directive list fixed after the first iteration
  bool incomplete = false;      // a directive was declared inside this iteration
  bool reprofile = false;
  std::size_t cursor = 0;       // next directive expected at a call site
  std::vector<std::unique_ptr<detail::Slot>> slots;
  std::map<std::pair<int, int>, std::uint32_t> ordinals;
  RegionReport report;
  IterationRecord cur;

  MessageLog log;

  // Directive bookkeeping (engine.cpp).
  detail::Slot& declare(Direction dir, detail::BufferState& st, std::size_t start,
                        std::size_t count, int peer);
  void attach(detail::Slot& s);
  void detach_directive_segments();
  void call_site(detail::Slot& s);

  // Iteration lifecycle (engine.cpp).
  void begin_iteration();
  void end_iteration();
  void drain();
  void arm(detail::Slot& s);

  // Access hooks (engine.cpp).
  void before_access(detail::BufferState& st, detail::TrackedSegment& seg, std::size_t off,
                     bool is_write);
  void after_access(detail::BufferState& st, detail::TrackedSegment& seg, std::size_t off,
                    bool is_write);

  // Messaging helpers (engine.cpp).
  void trigger(detail::Slot& s, std::size_t j);
  void flush_run(detail::Slot& s);
  void send_run(detail::Slot& s, std::size_t off, std::size_t len, MessageKind kind);
  void send_pending(detail::Slot& s, MessageKind kind);
  bool poll_recv(detail::Slot& s, bool block_one);
  void wait_element(detail::Slot& s, std::size_t j);
  void wait_all_elements(detail::Slot& s);
  void land(detail::Slot& s);
  void install(detail::Slot& s, std::size_t j);
  void set_watch(detail::Slot& s, std::uint8_t bit, bool on);
  void flag(detail::Slot& s, const std::string& why);

  detail::TrackedSegment& segment_of(const detail::Slot& s) const;
  std::uint32_t reads_of(const detail::Slot& s, std::size_t j) const;
  std::uint32_t writes_of(const detail::Slot& s, std::size_t j) const;
  detail::Slot& slot_for(std::size_t ordinal) const;
};

}  // namespace mdmp
