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

#include <cstring>
#include <thread>

#include "mdmp/transport.hpp"
#include "support.hpp"

namespace mdmp {
namespace {

std::vector<std::byte> bytes_of(std::uint32_t v) {
  std::vector<std::byte> b(4);
  std::memcpy(b.data(), &v, 4);
  return b;
}

std::uint32_t value_of(std::span<const std::byte> b) {
  std::uint32_t v = 0;
  std::memcpy(&v, b.data(), 4);
  return v;
}

TEST(InProcess, DeliversInOrderPerTag) {
  InProcessFabric f(2);
  auto& a = f.endpoint(0);
  auto& b = f.endpoint(1);
  for (std::uint32_t k = 0; k < 5; ++k) a.isend(1, 7, bytes_of(k));
  a.isend(1, 8, bytes_of(99));
  auto other = b.irecv(0, 8);
  b.wait(other);
  EXPECT_EQ(value_of(other.payload()), 99u);
  for (std::uint32_t k = 0; k < 5; ++k) {
    auto h = b.irecv(0, 7, 4);
    b.wait(h);
    EXPECT_EQ(value_of(h.payload()), k);
  }
}

TEST(InProcess, NullRankCompletesImmediately) {
  InProcessFabric f(1);
  auto& a = f.endpoint(0);
  auto s = a.isend(NULL_RANK, 1, bytes_of(1));
  auto r = a.irecv(NULL_RANK, 1);
  EXPECT_TRUE(a.test(s));
  EXPECT_TRUE(a.test(r));
  EXPECT_TRUE(r.payload().empty());
  EXPECT_EQ(a.messages_sent(), 0u);
}

TEST(InProcess, InvalidPeerIsRangeError) {
  InProcessFabric f(2);
  EXPECT_ERRC(f.endpoint(0).isend(2, 0, bytes_of(0)), Errc::RangeError);
  EXPECT_ERRC(f.endpoint(0).irecv(-3, 0), Errc::RangeError);
}

TEST(InProcess, ExpectedLengthMismatch) {
  InProcessFabric f(2);
  f.endpoint(0).isend(1, 0, bytes_of(3));
  auto h = f.endpoint(1).irecv(0, 0, 8);
  EXPECT_ERRC(f.endpoint(1).wait(h), Errc::LengthMismatch);
}

TEST(InProcess, RejectsBadCostAndRank) {
  EXPECT_ERRC(InProcessFabric(0), Errc::ConfigError);
  EXPECT_ERRC(InProcessFabric(2, CostModel{-1.0, 0.0}), Errc::ConfigError);
}

TEST(InProcess, CostModelDelaysVisibility) {
  const double alpha = 2e-3, beta = 1e-6;
  InProcessFabric f(2, CostModel{alpha, beta});
  std::vector<std::byte> payload(1000);
  const auto t0 = Clock::now();
  f.endpoint(0).isend(1, 0, payload);
  auto h = f.endpoint(1).irecv(0, 0);
  EXPECT_FALSE(f.endpoint(1).test(h));
  f.endpoint(1).wait(h);
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  EXPECT_GE(s, alpha + beta * 1000);
}

TEST(InProcess, ShutdownUnblocksWaiters) {
  InProcessFabric f(2);
  std::thread t([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    f.shutdown("test");
  });
  auto h = f.endpoint(1).irecv(0, 0);
  EXPECT_ERRC(f.endpoint(1).wait(h), Errc::TransportFailure);
  t.join();
  EXPECT_ERRC(f.endpoint(0).isend(1, 0, bytes_of(1)), Errc::TransportFailure);
}

TEST(InProcess, BarrierAcrossRanks) {
  for (int n : {1, 2, 3, 5}) {
    InProcessFabric f(n);
    std::vector<std::thread> ts;
    std::atomic<int> before{0};
    std::atomic<bool> early{false};
    for (int r = 0; r < n; ++r)
      ts.emplace_back([&, r] {
        ++before;
        f.endpoint(r).barrier();
        if (before.load() != n) early = true;
        f.endpoint(r).barrier();
      });
    for (auto& t : ts) t.join();
    EXPECT_FALSE(early) << n;
  }
}

TEST(InProcess, ConcurrentPingPong) {
  InProcessFabric f(2);
  constexpr std::uint32_t kRounds = 200;
  std::thread peer([&] {
    auto& e = f.endpoint(1);
    for (std::uint32_t k = 0; k < kRounds; ++k) {
      auto h = e.irecv(0, 1, 4);
      e.wait(h);
      e.isend(0, 2, bytes_of(value_of(h.payload()) + 1));
    }
  });
  auto& e = f.endpoint(0);
  std::uint32_t v = 0;
  for (std::uint32_t k = 0; k < kRounds; ++k) {
    e.isend(1, 1, bytes_of(v));
    auto h = e.irecv(1, 2, 4);
    e.wait(h);
    v = value_of(h.payload()) + 1;
  }
  peer.join();
  EXPECT_EQ(v, 2 * kRounds);
}

}  // namespace
}  // namespace mdmp
