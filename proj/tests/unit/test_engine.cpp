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

#include "mdmp/bench.hpp"
#include "mdmp/runtime.hpp"
#include "mdmp/wire.hpp"
#include "support.hpp"

namespace mdmp {
namespace {

using testing_support::Gen;

void two_ranks(const std::function<void(Endpoint&)>& r0, const std::function<void(Endpoint&)>& r1) {
  bench::run_ranks(2, CostModel{}, [&](int r, Endpoint& ep) { (r == 0 ? r0 : r1)(ep); });
}

float value(std::size_t it, std::size_t i) { return static_cast<float>(it * 1000 + i); }

std::size_t sends_in(const MessageLog& log, std::uint64_t it) {
  std::size_t n = 0;
  for (const auto& e : log.entries()) n += e.direction == Direction::Send && e.iteration == it;
  return n;
}

// Rank 0 writes every element once per iteration and sends at the bottom;
// rank 1 reads every element and posts its receive at the bottom.
struct Simple {
  std::size_t n = 16, iters = 3, chunk = 1;
  RegionReport sender, receiver;
  MessageLog send_log;
  std::vector<float> final_recv;
  std::vector<std::vector<float>> seen;  // receiver's reads per iteration

  void run() {
    two_ranks(
        [&](Endpoint& ep) {
          RuntimeOptions o;
          o.chunking.chunk = chunk;
          Runtime rt(ep, o);
          auto out = rt.create_buffer<float>(n);
          auto region = rt.region_begin();
          region.post_send(out, 0, n, 1);
          for (std::size_t it = 1; it <= iters; ++it) {
            region.iteration_begin();
            for (std::size_t i = 0; i < n; ++i) out.write(i, value(it, i));
            region.post_send(out, 0, n, 1);
            region.iteration_end();
          }
          sender = region.end();
          send_log = rt.take_log();
        },
        [&](Endpoint& ep) {
          Runtime rt(ep);
          auto in = rt.create_buffer<float>(n);
          auto region = rt.region_begin();
          region.post_recv(in, 0, n, 0);
          for (std::size_t it = 1; it <= iters; ++it) {
            region.iteration_begin();
            std::vector<float> row;
            for (std::size_t i = 0; i < n; ++i) row.push_back(in.read(i));
            seen.push_back(row);
            region.post_recv(in, 0, n, 0);
            region.iteration_end();
          }
          receiver = region.end();
          final_recv.assign(in.view().begin(), in.view().end());
        });
  }
};

TEST(Engine, ProfileThenManaged) {
  Simple s;
  s.run();
  EXPECT_EQ(s.sender.mode_sequence, (std::vector<Mode>{Mode::Profiling, Mode::Managed}));
  EXPECT_EQ(s.receiver.mode_sequence, (std::vector<Mode>{Mode::Profiling, Mode::Managed}));
  ASSERT_EQ(s.sender.profiles.size(), 1u);
  const auto& sp = s.sender.profiles[0];
  EXPECT_EQ(sp.direction, Direction::Send);
  EXPECT_EQ(sp.trigger_writes, std::vector<std::uint32_t>(s.n, 1));
  EXPECT_EQ(sp.total_writes, std::vector<std::uint32_t>(s.n, 1));
  const auto& rp = s.receiver.profiles.at(0);
  EXPECT_EQ(rp.direction, Direction::Recv);
  EXPECT_EQ(rp.trigger_reads, std::vector<std::uint32_t>(s.n, 1));
  EXPECT_EQ(rp.total_reads, std::vector<std::uint32_t>(s.n, 1));
  EXPECT_EQ(rp.trigger_writes, std::vector<std::uint32_t>(s.n, 0));

  EXPECT_EQ(sends_in(s.send_log, 1), 1u);
  for (std::uint64_t it = 2; it <= s.iters; ++it) EXPECT_EQ(sends_in(s.send_log, it), s.n);
  for (const auto& e : s.send_log.entries())
    EXPECT_EQ(e.kind, e.iteration == 1 ? MessageKind::Bulk : MessageKind::Element);

  // A bottom-placed receive is seen one iteration later, in every mode.
  for (std::size_t i = 0; i < s.n; ++i) {
    EXPECT_EQ(s.seen[0][i], 0.0f);
    for (std::size_t it = 2; it <= s.iters; ++it) EXPECT_EQ(s.seen[it - 1][i], value(it - 1, i));
    EXPECT_EQ(s.final_recv[i], value(s.iters, i));
  }
  EXPECT_TRUE(s.sender.demotions.empty());
  ASSERT_EQ(s.sender.iterations.size(), s.iters);
  EXPECT_EQ(s.sender.iterations[1].messages_sent, s.n);
  EXPECT_EQ(s.sender.iterations[1].bytes_sent, s.n * sizeof(float));
  EXPECT_EQ(s.receiver.iterations[1].messages_received, s.n);
}

TEST(Engine, ProfilesAreDeterministic) {
  Simple a, b;
  a.run();
  b.run();
  EXPECT_EQ(a.sender.profiles, b.sender.profiles);
  EXPECT_EQ(a.receiver.profiles, b.receiver.profiles);
  EXPECT_EQ(a.send_log.entries(), b.send_log.entries());
}

TEST(Engine, ChunkedRuns) {
  for (std::size_t chunk : {1, 3, 4, 16, 100}) {
    Simple s;
    s.n = 10;
    s.chunk = chunk;
    s.run();
    const std::size_t expect = (s.n + chunk - 1) / chunk;
    EXPECT_EQ(sends_in(s.send_log, 2), expect) << chunk;
    EXPECT_EQ(s.final_recv[9], value(s.iters, 9));
  }
}

// Each element goes out right after its last profiled write and not earlier.
TEST(Engine, TriggerTightness) {
  const std::size_t n = 8;
  std::vector<std::vector<std::size_t>> after_first, after_second;
  two_ranks(
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto out = rt.create_buffer<std::int32_t>(n);
        auto region = rt.region_begin();
        region.post_send(out, 0, n, 1);
        for (int it = 1; it <= 3; ++it) {
          region.iteration_begin();
          std::vector<std::size_t> a, b;
          for (std::size_t i = 0; i < n; ++i) {
            out.write(i, -1);
            a.push_back(rt.log().size());
            out.write(i, it * 10 + static_cast<int>(i));
            b.push_back(rt.log().size());
          }
          after_first.push_back(a);
          after_second.push_back(b);
          region.post_send(out, 0, n, 1);
          region.iteration_end();
        }
        region.end();
      },
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto in = rt.create_buffer<std::int32_t>(n);
        auto region = rt.region_begin();
        region.post_recv(in, 0, n, 0);
        for (int it = 1; it <= 3; ++it) {
          region.iteration_begin();
          region.post_recv(in, 0, n, 0);
          region.iteration_end();
          for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(in.view()[i], it * 10 + static_cast<int>(i));
        }
        region.end();
      });
  // Log sizes before iteration k: 1 (bulk of iteration 1) then n per iteration.
  for (int it = 2; it <= 3; ++it) {
    const std::size_t base = 1 + n * static_cast<std::size_t>(it - 2);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(after_first[it - 1][i], base + i);
      EXPECT_EQ(after_second[it - 1][i], base + i + 1);
    }
  }
}

// A receive placed after the reads installs each element right after its
// read; one placed before them installs before the first read.
TEST(Engine, InstallTiming) {
  const std::size_t n = 6;
  for (bool top : {false, true}) {
    std::vector<float> before_read, read_value, after_read;
    RegionReport rep;
    two_ranks(
        [&](Endpoint& ep) {
          Runtime rt(ep);
          auto out = rt.create_buffer<float>(n);
          auto region = rt.region_begin();
          region.post_send(out, 0, n, 1);
          for (std::size_t it = 1; it <= 3; ++it) {
            region.iteration_begin();
            for (std::size_t i = 0; i < n; ++i) out.write(i, value(it, i));
            region.post_send(out, 0, n, 1);
            region.iteration_end();
            ep.barrier();
          }
          region.end();
        },
        [&](Endpoint& ep) {
          Runtime rt(ep);
          auto in = rt.create_buffer<float>(n);
          auto region = rt.region_begin();
          region.post_recv(in, 0, n, 0);
          for (std::size_t it = 1; it <= 3; ++it) {
            region.iteration_begin();
            ep.barrier();  // the sender's messages for this iteration are out
            if (top) region.post_recv(in, 0, n, 0);
            for (std::size_t i = 0; i < n; ++i) {
              const float b = in.view()[i];
              const float v = in.read(i);
              if (it == 3) {
                before_read.push_back(b);
                read_value.push_back(v);
                after_read.push_back(in.view()[i]);
              }
            }
            if (!top) region.post_recv(in, 0, n, 0);
            region.iteration_end();
          }
          rep = region.end();
        });
    ASSERT_EQ(rep.profiles.size(), 1u);
    EXPECT_EQ(rep.profiles[0].trigger_reads, std::vector<std::uint32_t>(n, top ? 0 : 1));
    for (std::size_t i = 0; i < n; ++i) {
      if (top) {
        EXPECT_EQ(read_value[i], value(3, i));
      } else {
        EXPECT_EQ(before_read[i], value(2, i));
        EXPECT_EQ(read_value[i], value(2, i));
        EXPECT_EQ(after_read[i], value(3, i)) << "installed right after the last read";
      }
    }
  }
}

// Iteration 3 writes one sent element again after it went out. The value is
// unchanged, so results match, but the profile no longer holds.
TEST(Engine, DemotionAndReprofile) {
  const std::size_t n = 12, iters = 6;
  RegionReport rep, recv_rep;
  std::vector<float> got;
  two_ranks(
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto out = rt.create_buffer<float>(n);
        auto region = rt.region_begin();
        region.post_send(out, 0, n, 1);
        for (std::size_t it = 1; it <= iters; ++it) {
          region.iteration_begin();
          for (std::size_t i = 0; i < n; ++i) out.write(i, value(it, i));
          if (it == 3) out.write(5, value(it, 5));
          region.post_send(out, 0, n, 1);
          region.iteration_end();
        }
        rep = region.end();
      },
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto in = rt.create_buffer<float>(n);
        auto region = rt.region_begin();
        region.post_recv(in, 0, n, 0);
        for (std::size_t it = 1; it <= iters; ++it) {
          region.iteration_begin();
          region.post_recv(in, 0, n, 0);
          region.iteration_end();
        }
        recv_rep = region.end();
        got.assign(in.view().begin(), in.view().end());
      });
  ASSERT_EQ(rep.demotions.size(), 1u);
  EXPECT_EQ(rep.demotions[0].iteration, 3u);
  EXPECT_FALSE(rep.demotions[0].reason.empty());
  EXPECT_EQ(rep.mode_sequence, (std::vector<Mode>{Mode::Profiling, Mode::Managed, Mode::Passthrough,
                                                  Mode::Profiling, Mode::Managed}));
  ASSERT_EQ(rep.iterations.size(), iters);
  EXPECT_TRUE(rep.iterations[2].mismatch);
  EXPECT_EQ(rep.iterations[3].mode, Mode::Profiling);
  EXPECT_EQ(rep.iterations[4].mode, Mode::Managed);
  EXPECT_TRUE(recv_rep.demotions.empty());
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(got[i], value(iters, i));
}

TEST(Engine, PassthroughHintNeverProfiles) {
  RegionReport rep;
  MessageLog log;
  two_ranks(
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto out = rt.create_buffer<float>(4);
        auto region = rt.region_begin(ModeHint::Passthrough);
        for (int it = 0; it < 3; ++it) {
          region.iteration_begin();
          for (std::size_t i = 0; i < 4; ++i) out.write(i, 1.0f);
          EXPECT_EQ(out.counter_total(), 0u);
          region.post_send(out, 0, 4, 1);
          region.iteration_end();
        }
        rep = region.end();
        log = rt.take_log();
      },
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto in = rt.create_buffer<float>(4);
        auto region = rt.region_begin(ModeHint::Passthrough);
        for (int it = 0; it < 3; ++it) {
          region.iteration_begin();
          region.post_recv(in, 0, 4, 0);
          region.iteration_end();
        }
        region.end();
      });
  EXPECT_EQ(rep.mode_sequence, std::vector<Mode>{Mode::Passthrough});
  EXPECT_TRUE(rep.profiles.empty());
  EXPECT_EQ(log.size(), 3u);
}

TEST(Engine, OverlappingSendsShareCounters) {
  std::vector<float> a, b;
  two_ranks(
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto out = rt.create_buffer<float>(8);
        auto region = rt.region_begin();
        region.post_send(out, 0, 5, 1);
        region.post_send(out, 3, 5, 1);
        for (std::size_t it = 1; it <= 3; ++it) {
          region.iteration_begin();
          for (std::size_t i = 0; i < 8; ++i) out.write(i, value(it, i));
          region.post_send(out, 0, 5, 1);
          region.post_send(out, 3, 5, 1);
          region.iteration_end();
        }
        auto rep = region.end();
        EXPECT_TRUE(rep.demotions.empty());
      },
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto x = rt.create_buffer<float>(5);
        auto y = rt.create_buffer<float>(5);
        auto region = rt.region_begin();
        region.post_recv(x, 0, 5, 0);
        region.post_recv(y, 0, 5, 0);
        for (std::size_t it = 1; it <= 3; ++it) {
          region.iteration_begin();
          region.post_recv(x, 0, 5, 0);
          region.post_recv(y, 0, 5, 0);
          region.iteration_end();
        }
        region.end();
        a.assign(x.view().begin(), x.view().end());
        b.assign(y.view().begin(), y.view().end());
      });
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i], value(3, i));
    EXPECT_EQ(b[i], value(3, i + 3));
  }
}

TEST(Engine, IdleDirectives) {
  InProcessFabric f(1);
  Runtime rt(f.endpoint(0));
  auto b = rt.create_buffer<double>(4);
  auto region = rt.region_begin();
  const auto s = region.post_send(b, 0, 4, NULL_RANK);
  const auto r = region.post_recv(b, 0, 0, 0);
  for (int it = 0; it < 3; ++it) {
    region.iteration_begin();
    b.write(0, 1.0);
    region.post_send(b, 0, 4, NULL_RANK);
    region.post_recv(b, 0, 0, 0);
    EXPECT_EQ(region.element_state(s, 0), ElemState::Completed);
    region.iteration_end();
  }
  EXPECT_ERRC(region.element_state(r, 0), Errc::RangeError);
  EXPECT_EQ(region.directive_count(), 2u);
  region.end();
  EXPECT_TRUE(rt.log().empty());
}

TEST(Engine, ElementStatesDuringManagedIteration) {
  two_ranks(
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto out = rt.create_buffer<float>(3);
        auto region = rt.region_begin();
        const auto d = region.post_send(out, 0, 3, 1);
        for (int it = 1; it <= 2; ++it) {
          region.iteration_begin();
          EXPECT_EQ(region.element_state(d, 0), ElemState::Pending);
          out.write(0, 1.0f);
          if (it == 2) {
            EXPECT_NE(region.element_state(d, 0), ElemState::Pending);
            EXPECT_EQ(region.element_state(d, 1), ElemState::Pending);
          }
          out.write(1, 1.0f);
          out.write(2, 1.0f);
          region.post_send(out, 0, 3, 1);
          region.iteration_end();
          EXPECT_EQ(region.element_state(d, 2), ElemState::Completed);
        }
        region.end();
      },
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto in = rt.create_buffer<float>(3);
        auto region = rt.region_begin();
        const auto d = region.post_recv(in, 0, 3, 0);
        for (int it = 1; it <= 2; ++it) {
          region.iteration_begin();
          if (it == 2) EXPECT_EQ(region.element_state(d, 0), ElemState::Pending);
          region.post_recv(in, 0, 3, 0);
          region.iteration_end();
        }
        region.end();
      });
}

TEST(Engine, LifecycleErrors) {
  InProcessFabric f(1);
  Runtime rt(f.endpoint(0));
  auto b = rt.create_buffer<float>(8);
  auto region = rt.region_begin();
  EXPECT_TRUE(rt.region_active());
  EXPECT_ERRC(rt.region_begin(), Errc::NestedRegion);
  EXPECT_ERRC(region.iteration_end(), Errc::Unbalanced);
  region.iteration_begin();
  EXPECT_ERRC(region.iteration_begin(), Errc::Unbalanced);
  EXPECT_ERRC(region.end(), Errc::OpenIteration);
  region.iteration_end();
  region.end();
  EXPECT_FALSE(region.active());
  EXPECT_ERRC(region.iteration_begin(), Errc::InactiveRegion);
  EXPECT_ERRC(region.post_send(b, 0, 1, 0), Errc::InactiveRegion);

  auto second = rt.region_begin();
  EXPECT_ERRC(region.iteration_begin(), Errc::InactiveRegion) << "stale handle";
  second.end();
}

TEST(Engine, PendingCommunicationAtEnd) {
  InProcessFabric f(1);
  Runtime rt(f.endpoint(0));
  auto b = rt.create_buffer<float>(4);
  auto region = rt.region_begin();
  region.iteration_begin();
  region.post_send(b, 0, 4, 0);  // to self
  EXPECT_ERRC(region.end(), Errc::PendingCommunication);
}

TEST(Engine, DirectiveChecks) {
  InProcessFabric f(2);
  Runtime rt(f.endpoint(0));
  auto b = rt.create_buffer<float>(8);
  auto c = rt.create_buffer<float>(8);
  rt.track(c, 0, 2);
  auto region = rt.region_begin();
  EXPECT_ERRC(region.post_send(b, 6, 3, 1), Errc::RangeError);
  EXPECT_ERRC(region.post_send(b, 0, 2, 5), Errc::RangeError);
  region.post_send(b, 0, 4, 1);
  EXPECT_ERRC(region.post_recv(b, 2, 4, 1), Errc::OverlapConflict);
  EXPECT_ERRC(region.post_send(c, 1, 2, 1), Errc::OverlapConflict);
  region.post_send(b, 2, 4, 1);  // send/send overlap is fine
  EXPECT_EQ(region.directive_count(), 2u);
  region.iteration_begin();
  EXPECT_ERRC(region.post_send(b, 0, 3, 1), Errc::DirectiveMismatch);
}

TEST(Engine, MissingCallSite) {
  InProcessFabric f(1);
  Runtime rt(f.endpoint(0));
  auto b = rt.create_buffer<float>(4);
  auto region = rt.region_begin();
  region.post_recv(b, 0, 4, NULL_RANK);
  region.iteration_begin();
  EXPECT_ERRC(region.iteration_end(), Errc::DirectiveMismatch);
  EXPECT_ERRC(region.post_recv(b, 0, 4, NULL_RANK), Errc::DirectiveMismatch)
      << "no declarations after the first iteration";
  region.iteration_begin();
  region.post_recv(b, 0, 4, NULL_RANK);
  EXPECT_ERRC(region.post_recv(b, 0, 4, NULL_RANK), Errc::DirectiveMismatch)
      << "more directives than declared";
  region.iteration_end();
}

TEST(Engine, DirectiveFirstSeenInsideIterationDelaysProfile) {
  RegionReport rep;
  two_ranks(
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto out = rt.create_buffer<float>(4);
        auto region = rt.region_begin();
        for (std::size_t it = 1; it <= 3; ++it) {
          region.iteration_begin();
          for (std::size_t i = 0; i < 4; ++i) out.write(i, value(it, i));
          region.post_send(out, 0, 4, 1);
          region.iteration_end();
        }
        rep = region.end();
      },
      [&](Endpoint& ep) {
        Runtime rt(ep);
        auto in = rt.create_buffer<float>(4);
        auto region = rt.region_begin();
        for (std::size_t it = 1; it <= 3; ++it) {
          region.iteration_begin();
          region.post_recv(in, 0, 4, 0);
          region.iteration_end();
          EXPECT_EQ(in.view()[3], value(it, 3));
        }
        region.end();
      });
  ASSERT_EQ(rep.iterations.size(), 3u);
  EXPECT_EQ(rep.iterations[0].mode, Mode::Profiling);
  EXPECT_EQ(rep.iterations[1].mode, Mode::Profiling);
  EXPECT_EQ(rep.iterations[2].mode, Mode::Managed);
}

// Raw messages on a directive's tag exercise the receiver's checks.
TEST(Engine, MalformedMessages) {
  auto frame = [](std::uint32_t off, std::uint32_t len) {
    std::vector<std::byte> p(12 + 4 * len);
    wire::put_u32(p.data(), off);
    wire::put_u32(p.data() + 4, len);
    wire::put_u32(p.data() + 8, 0);
    return p;
  };
  const Tag tag = Tag{1} << 32;  // first region, first receive from rank 0
  struct Case {
    std::vector<std::vector<std::byte>> msgs;
    Errc code;
  };
  const std::vector<Case> cases{{{frame(0, 2), frame(1, 2)}, Errc::ProtocolError},
                                {{frame(3, 4)}, Errc::LengthMismatch},
                                {{std::vector<std::byte>(5)}, Errc::ProtocolError}};
  for (const auto& c : cases) {
    InProcessFabric f(2);
    for (const auto& m : c.msgs) f.endpoint(0).isend(1, tag, m);
    Runtime rt(f.endpoint(1));
    auto in = rt.create_buffer<float>(4);
    auto region = rt.region_begin();
    region.iteration_begin();
    region.post_recv(in, 0, 4, 0);
    EXPECT_ERRC(region.iteration_end(), c.code);
  }
}

// Property: random per-element write counts and access orders give the same
// final buffers in managed and passthrough regions.
TEST(Engine, ManagedMatchesPassthroughOnRandomKernels) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    Gen g(seed);
    const std::size_t n = g.range(1, 40), iters = g.range(2, 5), chunk = g.range(1, 9);
    std::vector<std::size_t> writes(n), order(n);
    for (auto& w : writes) w = g.range(1, 3);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[g.range(0, i - 1)]);
    const bool recv_top = g.coin();

    auto run = [&](ModeHint hint) {
      std::vector<std::int32_t> result;
      two_ranks(
          [&](Endpoint& ep) {
            RuntimeOptions o;
            o.chunking.chunk = chunk;
            Runtime rt(ep, o);
            auto out = rt.create_buffer<std::int32_t>(n);
            auto back = rt.create_buffer<std::int32_t>(n);
            auto region = rt.region_begin(hint);
            region.post_send(out, 0, n, 1);
            region.post_recv(back, 0, n, 1);
            for (std::size_t it = 1; it <= iters; ++it) {
              region.iteration_begin();
              for (std::size_t i : order)
                for (std::size_t w = 0; w < writes[i]; ++w)
                  out.write(i, back.read(i) + static_cast<std::int32_t>(it * (w + 1) + i));
              region.post_send(out, 0, n, 1);
              region.post_recv(back, 0, n, 1);
              region.iteration_end();
            }
            region.end();
            result.assign(back.view().begin(), back.view().end());
            result.insert(result.end(), out.view().begin(), out.view().end());
          },
          [&](Endpoint& ep) {
            RuntimeOptions o;
            o.chunking.chunk = chunk;
            Runtime rt(ep, o);
            auto in = rt.create_buffer<std::int32_t>(n);
            auto echo = rt.create_buffer<std::int32_t>(n);
            auto region = rt.region_begin(hint);
            region.post_recv(in, 0, n, 0);
            region.post_send(echo, 0, n, 0);
            for (std::size_t it = 1; it <= iters; ++it) {
              region.iteration_begin();
              if (recv_top) region.post_recv(in, 0, n, 0);
              for (std::size_t i = 0; i < n; ++i) echo.write(i, in.read(i) * 3 - 1);
              if (!recv_top) region.post_recv(in, 0, n, 0);
              region.post_send(echo, 0, n, 0);
              region.iteration_end();
            }
            region.end();
          });
      return result;
    };
    EXPECT_EQ(run(ModeHint::Auto), run(ModeHint::Passthrough)) << "seed " << seed;
  }
}

}  // namespace
}  // namespace mdmp
