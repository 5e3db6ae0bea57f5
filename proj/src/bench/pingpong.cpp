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

// PingPong family. Rank 0 fills its send buffer from its receive buffer
// (plus one, so a stale element is visible in the result) and sends it; rank 1
// receives, does the same copy and sends it back.

#include <cstring>
#include <utility>

#include "mdmp/bench.hpp"
#include "mdmp/error.hpp"

namespace mdmp::bench {

std::string_view to_string(PingPongKind k) {
  switch (k) {
    case PingPongKind::Plain: return "pingpong";
    case PingPongKind::Selective: return "selective";
    case PingPongKind::Delay: return "delay";
    case PingPongKind::SelectiveDelay: return "selective-delay";
  }
  return "?";
}

PingPongKind parse_pingpong_kind(std::string_view s) {
  if (s == "pingpong") return PingPongKind::Plain;
  if (s == "selective") return PingPongKind::Selective;
  if (s == "delay") return PingPongKind::Delay;
  if (s == "selective-delay") return PingPongKind::SelectiveDelay;
  throw Error(Errc::ConfigError, "unknown benchmark '" + std::string(s) + "'");
}

std::size_t BenchConfig::communicated() const {
  const bool selective = kind == PingPongKind::Selective || kind == PingPongKind::SelectiveDelay;
  return selective ? selected : elements;
}

void BenchConfig::validate() const {
  if (elements == 0) throw Error(Errc::ConfigError, "elements must be at least 1");
  if (elements > (std::size_t{1} << 31)) throw Error(Errc::ConfigError, "elements too large");
  if (communicated() > elements)
    throw Error(Errc::ConfigError, "selected (" + std::to_string(selected) +
                                       ") exceeds elements (" + std::to_string(elements) + ")");
  if (iterations == 0) throw Error(Errc::ConfigError, "iterations must be at least 1");
  if (repeats == 0) throw Error(Errc::ConfigError, "repeats must be at least 1");
  if (chunk == 0) throw Error(Errc::ConfigError, "chunk must be at least 1");
  cost.validate();
}

MessageLog BenchResult::merged_log() const {
  MessageLog out;
  for (const auto& r : ranks) out.merge(r.log);
  return out;
}

namespace {

using Range = std::pair<std::size_t, std::size_t>;  // start, count

// First ceil(s/2) and last floor(s/2) elements; one range when they touch.
std::vector<Range> comm_ranges(const BenchConfig& c) {
  const std::size_t n = c.elements, s = c.communicated();
  if (s == 0) return {};
  if (s >= n) return {{0, n}};
  std::vector<Range> out{{0, (s + 1) / 2}};
  if (s / 2 > 0) out.emplace_back(n - s / 2, s / 2);
  return out;
}

std::size_t delay_of(const BenchConfig& c) {
  const bool delayed = c.kind == PingPongKind::Delay || c.kind == PingPongKind::SelectiveDelay;
  return delayed ? c.delay_elems : 0;
}

template <class T>
T initial_value(std::uint64_t seed, int rank, std::size_t i) {
  return static_cast<T>(static_cast<std::int32_t>((seed % 97) + 3 * static_cast<std::uint64_t>(rank) + i % 13));
}

template <class T>
std::vector<std::byte> bytes_of(std::span<const T> v) {
  std::vector<std::byte> out(v.size_bytes());
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

RepeatStats stats_from(const MessageLog& log, int rank, std::size_t iterations) {
  RepeatStats s;
  std::size_t msgs = 0, bytes = 0;
  for (const auto& e : log.entries()) {
    if (e.rank != rank || e.direction != Direction::Send) continue;
    ++msgs;
    bytes += e.bytes;
  }
  s.msgs_per_iter = static_cast<double>(msgs) / static_cast<double>(iterations);
  s.bytes_per_iter = static_cast<double>(bytes) / static_cast<double>(iterations);
  return s;
}

template <class T>
void runtime_repeat(const BenchConfig& c, Endpoint& ep, RankOutcome& out) {
  const int rank = ep.rank(), peer = 1 - rank;
  const std::size_t n = c.elements, d = delay_of(c);
  const auto ranges = comm_ranges(c);

  RuntimeOptions opts;
  opts.path = c.path;
  opts.chunking.chunk = c.chunk;
  opts.log_timestamps = c.log_timestamps;
  Runtime rt(ep, opts);
  auto send = rt.create_buffer<T>(n);
  auto recv = rt.create_buffer<T>(n);
  for (std::size_t i = 0; i < n; ++i) recv.data()[i] = initial_value<T>(c.seed, rank, i);

  Region region = rt.region_begin(c.mode == BenchMode::Managed ? ModeHint::Auto : ModeHint::Passthrough);
  auto post_sends = [&] {
    for (auto [s, k] : ranges) region.post_send(send, s, k, peer);
  };
  auto post_recvs = [&] {
    for (auto [s, k] : ranges) region.post_recv(recv, s, k, peer);
  };
  if (rank == 0) {
    post_sends();
    post_recvs();
  } else {
    post_recvs();
    post_sends();
  }

  ep.barrier();
  Stopwatch sw;
  for (std::size_t it = 0; it < c.iterations; ++it) {
    region.iteration_begin();
    if (rank == 1) post_recvs();
    for (std::size_t i = 0; i < n; ++i) {
      if (d) delay(d);
      send.write(i, static_cast<T>(recv.read(i) + T(1)));
    }
    if (rank == 0) {
      post_sends();
      post_recvs();
    } else {
      post_sends();
    }
    region.iteration_end();
  }
  const double wall = sw.seconds();
  RegionReport report = region.end();

  out.log = rt.take_log();
  RepeatStats rs = stats_from(out.log, rank, c.iterations);
  rs.wall_time_s = wall;
  rs.demotions = report.demotions.size();
  out.repeats.push_back(rs);
  out.reports = {std::move(report)};
  out.buffers = {bytes_of<T>(send.view()), bytes_of<T>(recv.view())};
}

template <class T>
void bulk_repeat(const BenchConfig& c, Endpoint& ep, RankOutcome& out) {
  const int rank = ep.rank(), peer = 1 - rank;
  const std::size_t n = c.elements, d = delay_of(c);
  const auto ranges = comm_ranges(c);
  const Tag tag = 1;
  std::vector<T> send(n), recv(n);
  for (std::size_t i = 0; i < n; ++i) recv[i] = initial_value<T>(c.seed, rank, i);
  MessageLog log;
  auto note = [&](std::size_t it, Direction dir, const Range& r) {
    LogEntry e;
    e.rank = rank;
    e.iteration = it + 1;
    e.direction = dir;
    e.peer = peer;
    e.tag = tag;
    e.kind = MessageKind::Bulk;
    e.offset = static_cast<std::uint32_t>(r.first);
    e.elements = static_cast<std::uint32_t>(r.second);
    e.bytes = r.second * sizeof(T);
    if (c.log_timestamps) e.issue_ns = e.complete_ns = monotonic_ns();
    log.append(e);
  };
  auto receive = [&](std::size_t it) {
    std::vector<CommHandle> hs;
    for (const auto& r : ranges) hs.push_back(ep.irecv(peer, tag, r.second * sizeof(T)));
    ep.wait_all(hs);
    for (std::size_t k = 0; k < ranges.size(); ++k) {
      std::memcpy(recv.data() + ranges[k].first, hs[k].payload().data(), ranges[k].second * sizeof(T));
      note(it, Direction::Recv, ranges[k]);
    }
  };

  ep.barrier();
  Stopwatch sw;
  for (std::size_t it = 0; it < c.iterations; ++it) {
    if (rank == 1) receive(it);
    for (std::size_t i = 0; i < n; ++i) {
      if (d) delay(d);
      send[i] = static_cast<T>(recv[i] + T(1));
    }
    std::vector<CommHandle> sends;
    for (const auto& r : ranges) {
      sends.push_back(ep.isend(peer, tag,
                               std::span<const std::byte>(reinterpret_cast<const std::byte*>(send.data() + r.first),
                                                          r.second * sizeof(T))));
      note(it, Direction::Send, r);
    }
    if (rank == 0) receive(it);
    ep.wait_all(sends);
  }
  const double wall = sw.seconds();

  RepeatStats rs = stats_from(log, rank, c.iterations);
  rs.wall_time_s = wall;
  out.repeats.push_back(rs);
  out.log = std::move(log);
  out.reports.clear();
  out.buffers = {bytes_of<T>(send), bytes_of<T>(recv)};
}

template <class T>
RankOutcome pingpong_typed(const BenchConfig& c, Endpoint& ep) {
  RankOutcome out;
  out.rank = ep.rank();
  for (std::size_t r = 0; r < c.repeats; ++r) {
    if (c.mode == BenchMode::Bulk)
      bulk_repeat<T>(c, ep, out);
    else
      runtime_repeat<T>(c, ep, out);
  }
  return out;
}

}  // namespace

RankOutcome pingpong_rank(const BenchConfig& cfg, Endpoint& ep) {
  cfg.validate();
  if (ep.size() != 2)
    throw Error(Errc::ConfigError, "the PingPong benchmarks need exactly 2 ranks, got " +
                                       std::to_string(ep.size()));
  switch (cfg.elem) {
    case ElemKind::Int32: return pingpong_typed<std::int32_t>(cfg, ep);
    case ElemKind::Float32: return pingpong_typed<float>(cfg, ep);
    case ElemKind::Float64: return pingpong_typed<double>(cfg, ep);
  }
  throw Error(Errc::ConfigError, "unknown element kind");
}

BenchResult run_pingpong(const BenchConfig& cfg) {
  cfg.validate();
  BenchResult res;
  res.config = cfg;
  res.ranks.resize(2);
  run_ranks(2, cfg.cost, [&](int r, Endpoint& ep) {
    res.ranks[static_cast<std::size_t>(r)] = pingpong_rank(cfg, ep);
  });
  std::vector<double> walls;
  for (const auto& s : res.ranks[0].repeats) walls.push_back(s.wall_time_s);
  res.timing = compute_stats(walls);
  std::vector<std::vector<std::byte>> parts;
  for (const auto& r : res.ranks) parts.insert(parts.end(), r.buffers.begin(), r.buffers.end());
  res.checksum = checksum_bytes(parts);
  return res;
}

}  // namespace mdmp::bench
