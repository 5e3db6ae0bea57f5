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

// Point-to-point non-blocking byte messages between ranks.
//
// Matching follows the usual message-passing rules: a receive posted for
// (peer, tag) completes with the oldest undelivered message from that peer
// carrying that tag, and receives posted for the same (peer, tag) complete in
// posting order. A CostModel delays the moment a message becomes matchable
// without ever blocking the sender.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mdmp {

using Clock = std::chrono::steady_clock;
using Tag = std::uint64_t;

/// Peer id that turns a send or receive into a no-op (the halo edges of a
/// decomposed domain).
inline constexpr int NULL_RANK = -1;

/// Tags with the top bit set are reserved for transport-internal traffic.
inline constexpr Tag kReservedTagBit = Tag{1} << 63;

struct CostModel {
  double alpha = 0.0;  ///< per-message latency, seconds
  double beta = 0.0;   ///< per-byte transfer cost, seconds/byte

  Clock::duration delay(std::size_t bytes) const;
  void validate() const;
};

enum class HandleKind { Send, Recv };

namespace detail {

struct Request {
  HandleKind kind = HandleKind::Send;
  int peer = NULL_RANK;
  Tag tag = 0;
  std::optional<std::size_t> expected;
  std::atomic<bool> complete{false};
  std::atomic<bool> failed{false};
  std::size_t delivered_length = 0;
  std::vector<std::byte> payload;
};

struct Envelope {
  int src = 0;
  Tag tag = 0;
  std::vector<std::byte> payload;
  Clock::time_point visible_at{};
};

struct ChannelKey {
  int src;
  Tag tag;
  bool operator==(const ChannelKey&) const = default;
};

struct ChannelKeyHash {
  std::size_t operator()(const ChannelKey& k) const noexcept {
    return std::hash<Tag>{}(k.tag * 0x9E3779B97F4A7C15ull ^ static_cast<Tag>(k.src));
  }
};

/// Incoming message store of one rank. Filled by other rank contexts (or a
/// socket reader), drained only by the owning rank.
class Mailbox {
 public:
  void push(Envelope e);

  /// Pops the front message of (src, tag) if it is visible at `now`. When the
  /// front exists but is not yet visible, `next_visible` receives its time.
  std::optional<Envelope> try_pop(const ChannelKey& key, Clock::time_point now,
                                  std::optional<Clock::time_point>* next_visible);

  std::uint64_t version() const { return version_.load(std::memory_order_acquire); }

  /// Sleeps until the version moves past `seen`, the deadline passes or the
  /// mailbox is shut down.
  void wait_change(std::uint64_t seen, std::optional<Clock::time_point> deadline);

  /// Wakes waiters without delivering anything (send completions).
  void poke();

  void shutdown(const std::string& reason);
  bool is_shutdown() const { return shutdown_.load(std::memory_order_acquire); }
  std::string shutdown_reason() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<ChannelKey, std::deque<Envelope>, ChannelKeyHash> queues_;
  std::atomic<std::uint64_t> version_{0};
  std::atomic<bool> shutdown_{false};
  std::string reason_;
};

}  // namespace detail

/// The non-blocking request object returned by isend/irecv.
class CommHandle {
 public:
  CommHandle() = default;

  bool valid() const { return static_cast<bool>(req_); }
  HandleKind kind() const { return req_->kind; }
  int peer() const { return req_->peer; }
  Tag tag() const { return req_->tag; }

  /// Last observed state; does not drive progress (use Endpoint::test).
  bool complete() const { return req_ && req_->complete.load(std::memory_order_acquire); }

  /// Received bytes. Only meaningful for a completed receive.
  std::span<const std::byte> payload() const { return req_->payload; }
  std::vector<std::byte> take_payload() { return std::move(req_->payload); }

 private:
  friend class Endpoint;
  explicit CommHandle(std::shared_ptr<detail::Request> r) : req_(std::move(r)) {}
  std::shared_ptr<detail::Request> req_;
};

/// One rank's view of the communicator. isend/irecv/test/wait are called only
/// from the owning rank context.
class Endpoint {
 public:
  Endpoint(int rank, int size, CostModel cost);
  virtual ~Endpoint();

  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  int rank() const { return rank_; }
  int size() const { return size_; }
  const CostModel& cost() const { return cost_; }

  CommHandle isend(int peer, Tag tag, std::span<const std::byte> payload);
  CommHandle isend(int peer, Tag tag, std::vector<std::byte> payload);

  /// `expected` of nullopt accepts any payload length.
  CommHandle irecv(int peer, Tag tag, std::optional<std::size_t> expected = std::nullopt);

  /// Drives matching for the handle's channel; true once complete.
  bool test(CommHandle& h);
  void wait(CommHandle& h);
  void wait_all(std::span<CommHandle> handles);
  void barrier();

  /// Unblocks every waiter on this endpoint with TransportFailure.
  void shutdown(const std::string& reason);

  /// Busy-poll short waits instead of sleeping. Defaults to on when more than
  /// one hardware thread is available.
  void set_spin(bool spin) { spin_ = spin; }

  std::uint64_t messages_sent() const { return messages_sent_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }

  detail::Mailbox& inbox() { return inbox_; }

 protected:
  /// Hands the payload to the transport. Must not block. Implementations mark
  /// `req` complete once the payload is owned by the transport.
  virtual void transmit(int peer, Tag tag, std::vector<std::byte> payload,
                        const std::shared_ptr<detail::Request>& req) = 0;

  detail::Mailbox inbox_;

 private:
  void progress(const detail::ChannelKey& key);
  void check_failed(const detail::Request& r) const;
  [[noreturn]] void fail_shutdown() const;

  int rank_;
  int size_;
  CostModel cost_;
  bool spin_;
  std::uint64_t messages_sent_ = 0;
  std::uint64_t bytes_sent_ = 0;
  std::unordered_map<detail::ChannelKey, std::deque<std::shared_ptr<detail::Request>>,
                     detail::ChannelKeyHash>
      posted_;
};

class InProcessFabric;

class InProcessEndpoint final : public Endpoint {
 public:
  InProcessEndpoint(InProcessFabric& fabric, int rank, int size, CostModel cost)
      : Endpoint(rank, size, cost), fabric_(fabric) {}

 protected:
  void transmit(int peer, Tag tag, std::vector<std::byte> payload,
                const std::shared_ptr<detail::Request>& req) override;

 private:
  InProcessFabric& fabric_;
};

/// All ranks of one job living in a single process; each rank context owns one
/// endpoint.
class InProcessFabric {
 public:
  explicit InProcessFabric(int nranks, CostModel cost = {});

  int size() const { return static_cast<int>(endpoints_.size()); }
  Endpoint& endpoint(int rank) { return *endpoints_.at(static_cast<std::size_t>(rank)); }
  void shutdown(const std::string& reason);

 private:
  std::vector<std::unique_ptr<InProcessEndpoint>> endpoints_;
};

}  // namespace mdmp
