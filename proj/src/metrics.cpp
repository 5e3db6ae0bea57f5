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

#include "mdmp/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>
#include <ostream>

#include "mdmp/error.hpp"

namespace mdmp {

std::string_view to_string(LogDirection d) { return d == LogDirection::Send ? "send" : "recv"; }

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::Bulk: return "bulk";
    case MessageKind::Element: return "element";
    case MessageKind::SafetyNet: return "safety-net";
  }
  return "?";
}

std::int64_t monotonic_ns() {
  static const Clock::time_point epoch = Clock::now();
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - epoch).count();
}

void MessageLog::merge(const MessageLog& other) {
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

MessageLog MessageLog::for_rank(int rank) const {
  MessageLog out;
  for (const auto& e : entries_)
    if (e.rank == rank) out.append(e);
  return out;
}

void MessageLog::sort_canonical() {
  auto key = [](const LogEntry& e) {
    return std::tuple(e.rank, e.region, e.iteration, e.direction, e.peer, e.tag, e.offset);
  };
  std::stable_sort(entries_.begin(), entries_.end(),
                   [&](const LogEntry& a, const LogEntry& b) { return key(a) < key(b); });
}

void MessageLog::write_csv(std::ostream& os) const {
  os << "rank,region,iteration,direction,peer,tag,kind,offset,elements,bytes,issue_ns,complete_ns\n";
  for (const auto& e : entries_) {
    os << e.rank << ',' << e.region << ',' << e.iteration << ',' << to_string(e.direction) << ','
       << e.peer << ',' << e.tag << ',' << to_string(e.kind) << ',' << e.offset << ','
       << e.elements << ',' << e.bytes << ',' << e.issue_ns << ',' << e.complete_ns << '\n';
  }
}

std::vector<IterationSummary> summarize(const MessageLog& log) {
  std::map<std::pair<std::uint64_t, std::uint64_t>, IterationSummary> by_iter;
  for (const auto& e : log.entries()) {
    auto& s = by_iter[{e.region, e.iteration}];
    s.region = e.region;
    s.iteration = e.iteration;
    auto& t = e.direction == LogDirection::Send ? s.sent : s.received;
    ++t.messages;
    t.bytes += e.bytes;
  }
  std::vector<IterationSummary> out;
  out.reserve(by_iter.size());
  for (auto& [_, s] : by_iter) out.push_back(s);
  return out;
}

TimingStats compute_stats(std::span<const double> samples) {
  TimingStats s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  // Summation rounding may push the mean a hair outside [min, max].
  s.mean = std::clamp(s.mean, s.min, s.max);
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return s;
}

std::vector<KernelRatio> overhead_ratio(std::span<const KernelTime> candidate,
                                        std::span<const KernelTime> baseline) {
  if (candidate.size() != baseline.size())
    throw Error(Errc::MismatchedKernels, "kernel lists differ in length");
  std::vector<KernelRatio> out;
  out.reserve(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (candidate[i].kernel != baseline[i].kernel)
      throw Error(Errc::MismatchedKernels,
                  "'" + candidate[i].kernel + "' vs '" + baseline[i].kernel + "'");
    out.push_back({candidate[i].kernel, candidate[i].mean_s / baseline[i].mean_s});
  }
  return out;
}

}  // namespace mdmp
