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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mdmp/metrics.hpp"
#include "mdmp/runtime.hpp"
#include "mdmp/transport.hpp"

namespace mdmp::bench {

/// Bulk: hand-written isend/irecv on raw arrays, no runtime involved.
/// Passthrough: the runtime with a region forced to bulk directives.
/// Managed: the runtime profiling in iteration 1, then managed.
enum class BenchMode : std::uint8_t { Bulk, Passthrough, Managed };

std::string_view to_string(BenchMode m);
BenchMode parse_mode(std::string_view s);  // ConfigError on unknown names

enum class PingPongKind : std::uint8_t { Plain, Selective, Delay, SelectiveDelay };

std::string_view to_string(PingPongKind k);
PingPongKind parse_pingpong_kind(std::string_view s);

struct BenchConfig {
  PingPongKind kind = PingPongKind::Plain;
  std::size_t elements = 1024;
  std::size_t selected = 0;  // selective kinds only; others communicate every element
  std::size_t delay_elems = 0;  // delay kinds only
  std::size_t iterations = 100;
  std::size_t repeats = 3;
  BenchMode mode = BenchMode::Managed;
  std::size_t chunk = 1;
  ElemKind elem = ElemKind::Float32;
  CostModel cost;
  std::uint64_t seed = 1;
  AccessPath path = default_access_path();
  bool log_timestamps = false;

  /// Elements carried per direction per iteration.
  std::size_t communicated() const;
  void validate() const;  // ConfigError
};

/// Per repeat, as seen by one rank.
struct RepeatStats {
  double wall_time_s = 0.0;
  double msgs_per_iter = 0.0;   // messages this rank sent, mean over iterations
  double bytes_per_iter = 0.0;  // element payload bytes this rank sent, mean over iterations
  std::size_t demotions = 0;
};

struct RankOutcome {
  int rank = 0;
  std::vector<RepeatStats> repeats;
  MessageLog log;                    // last repeat
  std::vector<RegionReport> reports;  // last repeat (empty for Bulk)
  std::vector<std::vector<std::byte>> buffers;  // final buffer bytes, last repeat
};

struct BenchResult {
  BenchConfig config;
  std::vector<RankOutcome> ranks;  // indexed by rank
  TimingStats timing;              // rank 0 wall times
  std::uint64_t checksum = 0;      // over every rank's final buffers

  const std::vector<RepeatStats>& repeats() const { return ranks.at(0).repeats; }
  MessageLog merged_log() const;
};

/// Adds an integer to a double `d` times and stores the sum to a volatile sink.
void delay(std::size_t d);

std::uint64_t checksum_bytes(const std::vector<std::vector<std::byte>>& parts);

/// Runs `body(rank, endpoint)` for every rank of an in-process fabric, one
/// thread per rank. When a rank throws, the fabric is shut down so the other
/// ranks fail fast, and the first error is rethrown.
void run_ranks(int nranks, const CostModel& cost, const std::function<void(int, Endpoint&)>& body);

/// One rank's share of a PingPong-family run; the peer runs the same call.
RankOutcome pingpong_rank(const BenchConfig& cfg, Endpoint& ep);

/// Two in-process ranks.
BenchResult run_pingpong(const BenchConfig& cfg);

// --- STREAM -----------------------------------------------------------------

struct StreamConfig {
  std::size_t elements = 2'000'000;
  std::size_t repeats = 10;
  void validate() const;
};

inline const std::vector<std::string>& stream_kernels() {
  static const std::vector<std::string> k{"Int Assign", "Db Assign", "Db Copy",
                                          "Db Scale",   "Db Add",    "Db Triad"};
  return k;
}

inline const std::vector<std::string>& stream_configs() {
  static const std::vector<std::string> c{"baseline", "inside-generic", "inside-fast",
                                          "inactive-generic", "inactive-fast"};
  return c;
}

struct StreamSeries {
  std::string config;
  std::vector<KernelTime> kernels;             // mean seconds, stream_kernels() order
  std::vector<std::vector<double>> samples;    // [kernel][repeat]
  std::uint64_t counter_updates = 0;           // counters left after the run
  std::uint64_t checksum = 0;
};

struct StreamResult {
  StreamConfig config;
  std::vector<StreamSeries> series;  // stream_configs() order
  const StreamSeries& get(std::string_view config) const;
};

StreamResult run_stream(const StreamConfig& cfg);

// --- Jacobi ------------------------------------------------------------------

enum class JacobiVariant : std::uint8_t { Bulk, HandIntermingled, Managed };

std::string_view to_string(JacobiVariant v);
JacobiVariant parse_variant(std::string_view s);

struct JacobiConfig {
  std::size_t rows = 64;  // M
  std::size_t cols = 64;  // N
  int ranks = 2;
  std::size_t maxiter = 100;
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  JacobiVariant variant = JacobiVariant::Managed;
  BenchMode mode = BenchMode::Managed;  // Managed variant only: Passthrough or Managed
  std::size_t chunk = 1;
  CostModel cost;
  AccessPath path = default_access_path();
  bool log_timestamps = false;

  std::size_t rows_per_rank() const { return rows / static_cast<std::size_t>(ranks); }
  void validate() const;
};

/// Deterministic row data of the global (M+2) x (N+2) grid, including the
/// physical boundary. Depends only on the seed and the global row index.
std::vector<float> jacobi_initial_row(std::uint64_t seed, std::size_t global_row, std::size_t cols);
std::vector<float> jacobi_edge_row(std::uint64_t seed, std::size_t global_row, std::size_t cols);

struct JacobiRankOutcome {
  int rank = 0;
  std::vector<double> wall_times;
  std::vector<float> interior;  // MP x N, row-major
  MessageLog log;               // last repeat
  std::vector<RegionReport> reports;
  std::vector<RepeatStats> repeats;
};

struct JacobiResult {
  JacobiConfig config;
  std::vector<JacobiRankOutcome> ranks;
  TimingStats timing;
  std::uint64_t checksum = 0;

  /// Interior rows of every rank stacked in rank order: M x N.
  std::vector<float> interior() const;
  MessageLog merged_log() const;
};

JacobiRankOutcome jacobi_rank(const JacobiConfig& cfg, Endpoint& ep);
JacobiResult run_jacobi(const JacobiConfig& cfg);

}  // namespace mdmp::bench
