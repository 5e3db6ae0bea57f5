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
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdmp/transport.hpp"

namespace mdmp {

enum class LogDirection : std::uint8_t { Send, Recv };

/// Bulk: one message for a whole directive range. Element: a managed message
/// carrying a run of ready elements. SafetyNet: elements that were still
/// pending when the send directive was reached in a managed iteration.
enum class MessageKind : std::uint8_t { Bulk, Element, SafetyNet };

std::string_view to_string(LogDirection d);
std::string_view to_string(MessageKind k);

struct LogEntry {
  int rank = 0;
  std::uint64_t region = 0;
  std::uint64_t iteration = 0;  // 1-based within the region
  LogDirection direction = LogDirection::Send;
  int peer = NULL_RANK;
  Tag tag = 0;
  MessageKind kind = MessageKind::Bulk;
  std::uint32_t offset = 0;    // first element, relative to the directive range
  std::uint32_t elements = 0;
  std::size_t bytes = 0;       // element payload bytes
  std::int64_t issue_ns = -1;  // -1 unless timestamps are sampled
  std::int64_t complete_ns = -1;

  bool operator==(const LogEntry&) const = default;
};

/// Nanoseconds on the monotonic clock since the first call in this process.
std::int64_t monotonic_ns();

class MessageLog {
 public:
  void append(const LogEntry& e) { entries_.push_back(e); }
  const std::vector<LogEntry>& entries() const { return entries_; }
  LogEntry& entry(std::size_t k) { return entries_.at(k); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  void merge(const MessageLog& other);
  MessageLog for_rank(int rank) const;

  /// Orders entries by rank, region, iteration, direction, peer, tag and
  /// offset. Receive completions interleave with sends depending on thread
  /// timing; the sorted log does not.
  void sort_canonical();

  /// Header: rank,region,iteration,direction,peer,tag,kind,offset,elements,bytes,issue_ns,complete_ns
  void write_csv(std::ostream& os) const;

 private:
  std::vector<LogEntry> entries_;
};

struct DirectionTally {
  std::size_t messages = 0;
  std::size_t bytes = 0;
  bool operator==(const DirectionTally&) const = default;
};

struct IterationSummary {
  std::uint64_t region = 0;
  std::uint64_t iteration = 0;
  DirectionTally sent;
  DirectionTally received;
  bool operator==(const IterationSummary&) const = default;
};

/// Per-(region, iteration) message and byte counts, ordered by region then
/// iteration. Expects the log of a single rank.
std::vector<IterationSummary> summarize(const MessageLog& log);

struct TimingStats {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
};

TimingStats compute_stats(std::span<const double> samples);

class Stopwatch {
 public:
  Stopwatch() : start_(Clock::now()) {}
  void reset() { start_ = Clock::now(); }
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  Clock::time_point start_;
};

struct KernelTime {
  std::string kernel;
  double mean_s = 0.0;
};

struct KernelRatio {
  std::string kernel;
  double ratio = 0.0;
};

/// candidate mean / baseline mean per kernel. MismatchedKernels unless both
/// lists name the same kernels in the same order.
std::vector<KernelRatio> overhead_ratio(std::span<const KernelTime> candidate,
                                        std::span<const KernelTime> baseline);

}  // namespace mdmp
