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

#include "mdmp/transport.hpp"

#include <cmath>
#include <thread>

#include "mdmp/error.hpp"

#if defined(__linux__)
#include <sys/prctl.h>
#endif

namespace mdmp {

namespace {

// Spin only for waits shorter than this; longer ones sleep on the mailbox.
constexpr auto kSpinWindow = std::chrono::milliseconds(5);

void tighten_timer_slack() {
#if defined(__linux__)
  thread_local bool done = false;
  if (!done) {
    prctl(PR_SET_TIMERSLACK, 1UL, 0, 0, 0);
    done = true;
  }
#endif
}

}  // namespace

Clock::duration CostModel::delay(std::size_t bytes) const {
  const double s = alpha + beta * static_cast<double>(bytes);
  if (s <= 0.0) return Clock::duration::zero();
  return std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(s));
}

void CostModel::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw Error(Errc::ConfigError, "cost model needs finite alpha >= 0 and beta >= 0");
}

namespace detail {

void Mailbox::push(Envelope e) {
  {
    std::lock_guard lock(mu_);
    auto& q = queues_[ChannelKey{e.src, e.tag}];
    // FIFO per channel: a small message never overtakes a large one.
    if (!q.empty() && q.back().visible_at > e.visible_at) e.visible_at = q.back().visible_at;
    q.push_back(std::move(e));
    version_.fetch_add(1, std::memory_order_acq_rel);
  }
  cv_.notify_all();
}

std::optional<Envelope> Mailbox::try_pop(const ChannelKey& key, Clock::time_point now,
                                         std::optional<Clock::time_point>* next_visible) {
  std::lock_guard lock(mu_);
  auto it = queues_.find(key);
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  auto& front = it->second.front();
  if (front.visible_at > now) {
    if (next_visible) *next_visible = front.visible_at;
    return std::nullopt;
  }
  Envelope e = std::move(front);
  it->second.pop_front();
  return e;
}

void Mailbox::wait_change(std::uint64_t seen, std::optional<Clock::time_point> deadline) {
  std::unique_lock lock(mu_);
  auto ready = [&] {
    return version_.load(std::memory_order_acquire) != seen ||
           shutdown_.load(std::memory_order_acquire);
  };
  if (deadline)
    cv_.wait_until(lock, *deadline, ready);
  else
    cv_.wait(lock, ready);
}

void Mailbox::poke() {
  {
    std::lock_guard lock(mu_);
    version_.fetch_add(1, std::memory_order_acq_rel);
  }
  cv_.notify_all();
}

void Mailbox::shutdown(const std::string& reason) {
  {
    std::lock_guard lock(mu_);
    if (!shutdown_.load()) reason_ = reason;
    shutdown_.store(true, std::memory_order_release);
    version_.fetch_add(1, std::memory_order_acq_rel);
  }
  cv_.notify_all();
}

std::string Mailbox::shutdown_reason() const {
  std::lock_guard lock(mu_);
  return reason_;
}

}  // namespace detail

Endpoint::Endpoint(int rank, int size, CostModel cost)
    : rank_(rank), size_(size), cost_(cost), spin_(std::thread::hardware_concurrency() > 1) {
  cost_.validate();
  if (size < 1 || rank < 0 || rank >= size)
    throw Error(Errc::ConfigError, "rank " + std::to_string(rank) + " outside [0, " +
                                       std::to_string(size) + ")");
}

Endpoint::~Endpoint() = default;

CommHandle Endpoint::isend(int peer, Tag tag, std::span<const std::byte> payload) {
  return isend(peer, tag, std::vector<std::byte>(payload.begin(), payload.end()));
}

CommHandle Endpoint::isend(int peer, Tag tag, std::vector<std::byte> payload) {
  auto req = std::make_shared<detail::Request>();
  req->kind = HandleKind::Send;
  req->peer = peer;
  req->tag = tag;
  if (peer == NULL_RANK) {
    req->complete.store(true);
    return CommHandle(std::move(req));
  }
  if (peer < 0 || peer >= size_)
    throw Error(Errc::RangeError, "isend to invalid peer " + std::to_string(peer));
  if (inbox_.is_shutdown()) fail_shutdown();
  ++messages_sent_;
  bytes_sent_ += payload.size();
  transmit(peer, tag, std::move(payload), req);
  return CommHandle(std::move(req));
}

CommHandle Endpoint::irecv(int peer, Tag tag, std::optional<std::size_t> expected) {
  auto req = std::make_shared<detail::Request>();
  req->kind = HandleKind::Recv;
  req->peer = peer;
  req->tag = tag;
  req->expected = expected;
  if (peer == NULL_RANK) {
    req->complete.store(true);
    return CommHandle(std::move(req));
  }
  if (peer < 0 || peer >= size_)
    throw Error(Errc::RangeError, "irecv from invalid peer " + std::to_string(peer));
  posted_[detail::ChannelKey{peer, tag}].push_back(req);
  return CommHandle(std::move(req));
}

void Endpoint::progress(const detail::ChannelKey& key) {
  auto it = posted_.find(key);
  if (it == posted_.end()) return;
  auto& pending = it->second;
  while (!pending.empty()) {
    auto env = inbox_.try_pop(key, Clock::now(), nullptr);
    if (!env) break;
    auto req = std::move(pending.front());
    pending.pop_front();
    req->delivered_length = env->payload.size();
    if (req->expected && *req->expected != env->payload.size()) req->failed.store(true);
    req->payload = std::move(env->payload);
    req->complete.store(true, std::memory_order_release);
  }
}

void Endpoint::check_failed(const detail::Request& r) const {
  if (r.failed.load())
    throw Error(Errc::LengthMismatch, "expected " + std::to_string(r.expected.value_or(0)) +
                                          " bytes from rank " + std::to_string(r.peer) +
                                          ", got " + std::to_string(r.delivered_length));
}

void Endpoint::fail_shutdown() const {
  throw Error(Errc::TransportFailure,
              "rank " + std::to_string(rank_) + ": " + inbox_.shutdown_reason());
}

bool Endpoint::test(CommHandle& h) {
  if (!h.valid()) return true;
  auto& r = *h.req_;
  if (!r.complete.load(std::memory_order_acquire) && r.kind == HandleKind::Recv)
    progress(detail::ChannelKey{r.peer, r.tag});
  const bool done = r.complete.load(std::memory_order_acquire);
  if (done) check_failed(r);
  return done;
}

void Endpoint::wait(CommHandle& h) {
  if (!h.valid()) return;
  auto& r = *h.req_;
  const detail::ChannelKey key{r.peer, r.tag};
  for (;;) {
    const std::uint64_t seen = inbox_.version();
    if (test(h)) return;
    if (inbox_.is_shutdown()) fail_shutdown();

    std::optional<Clock::time_point> next;
    if (r.kind == HandleKind::Recv) {
      // Peek the channel front only to learn when it becomes visible.
      auto env = inbox_.try_pop(key, Clock::time_point::min(), &next);
      (void)env;
    }
    const auto now = Clock::now();
    if (spin_ && next && *next - now < kSpinWindow) {
      while (Clock::now() < *next && !inbox_.is_shutdown()) std::this_thread::yield();
      continue;
    }
    tighten_timer_slack();
    inbox_.wait_change(seen, next);
  }
}

void Endpoint::wait_all(std::span<CommHandle> handles) {
  for (auto& h : handles) wait(h);
}

void Endpoint::barrier() {
  // Dissemination barrier over reserved tags.
  if (size_ == 1) return;
  static const std::byte token[1] = {std::byte{0}};
  std::uint64_t round = 0;
  for (int dist = 1; dist < size_; dist <<= 1, ++round) {
    const Tag tag = kReservedTagBit | round;
    auto s = isend((rank_ + dist) % size_, tag, std::span<const std::byte>(token));
    auto r = irecv((rank_ - dist + size_) % size_, tag, 1);
    wait(r);
    wait(s);
  }
}

void Endpoint::shutdown(const std::string& reason) { inbox_.shutdown(reason); }

void InProcessEndpoint::transmit(int peer, Tag tag, std::vector<std::byte> payload,
                                 const std::shared_ptr<detail::Request>& req) {
  const auto visible = Clock::now() + cost().delay(payload.size());
  fabric_.endpoint(peer).inbox().push(
      detail::Envelope{rank(), tag, std::move(payload), visible});
  req->complete.store(true, std::memory_order_release);
}

InProcessFabric::InProcessFabric(int nranks, CostModel cost) {
  if (nranks < 1) throw Error(Errc::ConfigError, "fabric needs at least one rank");
  endpoints_.reserve(static_cast<std::size_t>(nranks));
  for (int r = 0; r < nranks; ++r)
    endpoints_.push_back(std::make_unique<InProcessEndpoint>(*this, r, nranks, cost));
}

void InProcessFabric::shutdown(const std::string& reason) {
  for (auto& ep : endpoints_) ep->shutdown(reason);
}

}  // namespace mdmp
