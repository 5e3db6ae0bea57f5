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

#include <exception>
#include <mutex>
#include <string_view>
#include <thread>

#include "mdmp/bench.hpp"
#include "mdmp/error.hpp"

namespace mdmp::bench {

namespace {
volatile double g_delay_sink = 0.0;
}

std::string_view to_string(BenchMode m) {
  switch (m) {
    case BenchMode::Bulk: return "bulk";
    case BenchMode::Passthrough: return "passthrough";
    case BenchMode::Managed: return "managed";
  }
  return "?";
}

BenchMode parse_mode(std::string_view s) {
  if (s == "bulk") return BenchMode::Bulk;
  if (s == "passthrough") return BenchMode::Passthrough;
  if (s == "managed") return BenchMode::Managed;
  throw Error(Errc::ConfigError, "unknown mode '" + std::string(s) + "' (bulk, passthrough, managed)");
}

[[gnu::noinline]] void delay(std::size_t d) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) acc += static_cast<int>(k & 0x7fffffff);
  g_delay_sink = acc;
}

std::uint64_t checksum_bytes(const std::vector<std::vector<std::byte>>& parts) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : parts) {
    h ^= std::hash<std::string_view>{}(
        std::string_view(reinterpret_cast<const char*>(p.data()), p.size()));
    h *= 0x100000001b3ull;
  }
  return h;
}

void run_ranks(int nranks, const CostModel& cost, const std::function<void(int, Endpoint&)>& body) {
  InProcessFabric fabric(nranks, cost);
  std::mutex mu;
  std::exception_ptr first;
  bool first_is_transport = false;
  auto run = [&](int r) {
    try {
      body(r, fabric.endpoint(r));
    } catch (...) {
      auto err = std::current_exception();
      bool transport = false;
      try {
        std::rethrow_exception(err);
      } catch (const Error& e) {
        transport = e.code() == Errc::TransportFailure;
      } catch (...) {
      }
      {
        std::lock_guard lock(mu);
        // Prefer the root cause over the failures it triggered elsewhere.
        if (!first || (first_is_transport && !transport)) {
          first = err;
          first_is_transport = transport;
        }
      }
      fabric.shutdown("rank " + std::to_string(r) + " failed");
    }
  };
  std::vector<std::thread> threads;
  for (int r = 1; r < nranks; ++r) threads.emplace_back(run, r);
  run(0);
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace mdmp::bench
