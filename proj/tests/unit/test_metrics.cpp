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

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <tuple>

#include "mdmp/metrics.hpp"
#include "support.hpp"

namespace mdmp {
namespace {

using testing_support::Gen;

LogEntry entry(int rank, std::uint64_t region, std::uint64_t it, LogDirection d, std::size_t bytes) {
  LogEntry e;
  e.rank = rank;
  e.region = region;
  e.iteration = it;
  e.direction = d;
  e.peer = 1 - rank;
  e.elements = static_cast<std::uint32_t>(bytes / 4);
  e.bytes = bytes;
  return e;
}

TEST(Metrics, CsvHeaderAndRow) {
  MessageLog log;
  auto e = entry(0, 1, 2, LogDirection::Recv, 8);
  e.tag = 77;
  e.kind = MessageKind::SafetyNet;
  e.offset = 3;
  log.append(e);
  std::ostringstream os;
  log.write_csv(os);
  EXPECT_EQ(os.str(),
            "rank,region,iteration,direction,peer,tag,kind,offset,elements,bytes,issue_ns,complete_ns\n"
            "0,1,2,recv,1,77,safety-net,3,2,8,-1,-1\n");
}

TEST(Metrics, ForRankAndMerge) {
  MessageLog a, b;
  a.append(entry(0, 1, 1, LogDirection::Send, 4));
  b.append(entry(1, 1, 1, LogDirection::Send, 4));
  b.append(entry(1, 1, 2, LogDirection::Send, 4));
  a.merge(b);
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a.for_rank(1).size(), 2u);
  EXPECT_EQ(a.for_rank(0).entry(0), a.entry(0));
}

// Property: any permutation of a log sorts to the same sequence.
TEST(Metrics, CanonicalOrderIgnoresArrivalOrder) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Gen g(seed);
    MessageLog log;
    const std::size_t n = g.range(1, 60);
    for (std::size_t k = 0; k < n; ++k) {
      auto e = entry(static_cast<int>(g.range(0, 1)), 1, g.range(1, 3),
                     g.coin() ? LogDirection::Send : LogDirection::Recv, 4);
      e.offset = static_cast<std::uint32_t>(k);
      log.append(e);
    }
    auto shuffled = log.entries();
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[g.range(0, i - 1)]);
    MessageLog other;
    for (const auto& e : shuffled) other.append(e);
    log.sort_canonical();
    other.sort_canonical();
    EXPECT_TRUE(log.entries() == other.entries());
    for (std::size_t k = 1; k < log.size(); ++k)
      EXPECT_LE(std::tuple(log.entries()[k - 1].rank, log.entries()[k - 1].iteration),
                std::tuple(log.entries()[k].rank, log.entries()[k].iteration));
  }
}

// Property: summarize agrees with a direct count over random logs.
TEST(Metrics, SummarizeMatchesDirectCount) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Gen g(seed);
    MessageLog log;
    const std::size_t n = g.range(0, 200);
    for (std::size_t k = 0; k < n; ++k)
      log.append(entry(0, g.range(1, 3), g.range(1, 5),
                       g.coin() ? LogDirection::Send : LogDirection::Recv, 4 * g.range(1, 9)));
    const auto sum = summarize(log);
    std::size_t total = 0;
    for (std::size_t k = 1; k < sum.size(); ++k)
      EXPECT_TRUE(std::pair(sum[k - 1].region, sum[k - 1].iteration) <
                  std::pair(sum[k].region, sum[k].iteration));
    for (const auto& s : sum) {
      DirectionTally sent, recv;
      for (const auto& e : log.entries()) {
        if (e.region != s.region || e.iteration != s.iteration) continue;
        auto& t = e.direction == LogDirection::Send ? sent : recv;
        ++t.messages;
        t.bytes += e.bytes;
      }
      EXPECT_EQ(s.sent, sent);
      EXPECT_EQ(s.received, recv);
      total += s.sent.messages + s.received.messages;
    }
    EXPECT_EQ(total, n);
  }
}

TEST(Metrics, StatsKnownValues) {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  const auto s = compute_stats(v);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.max, 4.0);
  EXPECT_DOUBLE_EQ(compute_stats(std::vector<double>{5.0, 1.0, 9.0}).median, 5.0);
  EXPECT_EQ(compute_stats(std::vector<double>{}).count, 0u);
}

// Property: min <= median <= max and min <= mean <= max.
TEST(Metrics, StatsBounds) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Gen g(seed);
    std::vector<double> v(g.range(1, 40));
    for (auto& x : v) x = static_cast<double>(g.range(0, 1'000'000)) * 1e-7;
    const auto s = compute_stats(v);
    EXPECT_LE(s.min, s.median);
    EXPECT_LE(s.median, s.max);
    EXPECT_LE(s.min, s.mean);
    EXPECT_LE(s.mean, s.max);
    EXPECT_DOUBLE_EQ(s.min, *std::min_element(v.begin(), v.end()));
  }
}

TEST(Metrics, OverheadRatio) {
  const std::vector<KernelTime> base{{"Db Copy", 0.5}, {"Db Add", 2.0}};
  const std::vector<KernelTime> cand{{"Db Copy", 1.5}, {"Db Add", 3.0}};
  const auto r = overhead_ratio(cand, base);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0].ratio, 3.0);
  EXPECT_DOUBLE_EQ(r[1].ratio, 1.5);
  const std::vector<KernelTime> swapped{{"Db Add", 3.0}, {"Db Copy", 1.5}};
  EXPECT_ERRC(overhead_ratio(swapped, base), Errc::MismatchedKernels);
  EXPECT_ERRC(overhead_ratio(std::span(cand).first(1), base), Errc::MismatchedKernels);
}

TEST(Metrics, MonotonicClockAdvances) {
  const auto a = monotonic_ns();
  Stopwatch sw;
  while (sw.seconds() < 1e-4) {
  }
  EXPECT_GT(monotonic_ns(), a);
}

}  // namespace
}  // namespace mdmp
