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

#include "mdmp/socket_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <deque>
#include <thread>

#include "mdmp/error.hpp"
#include "mdmp/wire.hpp"

namespace mdmp {

PeerAddress PeerAddress::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size())
    throw Error(Errc::ConfigError, "peer address must be host:port, got '" + std::string(text) + "'");
  unsigned port = 0;
  const auto digits = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port > 65535)
    throw Error(Errc::ConfigError, "bad port in '" + std::string(text) + "'");
  return PeerAddress{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

std::vector<PeerAddress> parse_peers(std::string_view csv) {
  std::vector<PeerAddress> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto item = csv.substr(pos, comma == std::string_view::npos ? csv.npos : comma - pos);
    if (!item.empty()) out.push_back(PeerAddress::parse(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct SocketEndpoint::Link {
  int peer = -1;
  int fd = -1;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::pair<std::vector<std::byte>, std::shared_ptr<detail::Request>>> outq;
  bool closing = false;
  std::thread reader;
  std::thread writer;
};

namespace {

bool write_all(int fd, const std::byte* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

bool read_all(int fd, std::byte* data, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

sockaddr_in resolve(const PeerAddress& a) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string host = a.host.empty() ? "127.0.0.1" : a.host;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
    throw Error(Errc::PeerUnreachable, "cannot resolve host '" + host + "'");
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(a.port);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

SocketEndpoint::SocketEndpoint(int rank, std::vector<PeerAddress> peers, CostModel cost)
    : Endpoint(rank, static_cast<int>(peers.size()), cost), peers_(std::move(peers)) {
  links_.resize(peers_.size());
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(Errc::TransportFailure, "socket(): " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(peers_[static_cast<std::size_t>(rank)]);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(Errc::TransportFailure, "cannot listen on port " +
                                            std::to_string(peers_[static_cast<std::size_t>(rank)].port) +
                                            ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  listen_port_ = ntohs(addr.sin_port);
  peers_[static_cast<std::size_t>(rank)].port = listen_port_;
}

SocketEndpoint::~SocketEndpoint() {
  for (auto& link : links_) {
    if (!link) continue;
    {
      std::lock_guard lock(link->mu);
      link->closing = true;
    }
    link->cv.notify_all();
    if (link->writer.joinable()) link->writer.join();
    ::shutdown(link->fd, SHUT_RDWR);
    if (link->reader.joinable()) link->reader.join();
    ::close(link->fd);
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void SocketEndpoint::set_peer(int rank, PeerAddress addr) {
  peers_.at(static_cast<std::size_t>(rank)) = std::move(addr);
}

void SocketEndpoint::connect(std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  const auto me = static_cast<std::uint32_t>(rank());

  for (int peer = 0; peer < rank(); ++peer) {
    const sockaddr_in addr = resolve(peers_[static_cast<std::size_t>(peer)]);
    int fd = -1;
    for (;;) {
      fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) break;
      ::close(fd);
      fd = -1;
      if (Clock::now() >= deadline)
        throw Error(Errc::PeerUnreachable, "rank " + std::to_string(peer) + " at " +
                                               peers_[static_cast<std::size_t>(peer)].host + ":" +
                                               std::to_string(peers_[static_cast<std::size_t>(peer)].port) +
                                               " did not accept before the timeout");
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    set_nodelay(fd);
    const auto hello = wire::encode_frame(me, 0, {});
    if (!write_all(fd, hello.data(), hello.size())) {
      ::close(fd);
      throw Error(Errc::PeerUnreachable, "handshake with rank " + std::to_string(peer) + " failed");
    }
    start_link(peer, fd);
  }

  for (int expected = size() - 1 - rank(); expected > 0; --expected) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (left.count() <= 0 || ::poll(&pfd, 1, static_cast<int>(left.count())) <= 0)
      throw Error(Errc::PeerUnreachable, "higher ranks did not connect before the timeout");
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) throw Error(Errc::TransportFailure, "accept(): " + std::string(std::strerror(errno)));
    set_nodelay(fd);
    std::array<std::byte, wire::kHeaderSize> hdr{};
    if (!read_all(fd, hdr.data(), hdr.size())) {
      ::close(fd);
      throw Error(Errc::ProtocolError, "connection closed during handshake");
    }
    const auto h = wire::decode_header(hdr);
    const int peer = static_cast<int>(h.sender);
    if (h.length != 0 || peer <= rank() || peer >= size() || links_[static_cast<std::size_t>(peer)]) {
      ::close(fd);
      throw Error(Errc::ProtocolError, "unexpected handshake from rank " + std::to_string(peer));
    }
    start_link(peer, fd);
  }
}

void SocketEndpoint::start_link(int peer, int fd) {
  auto link = std::make_unique<Link>();
  link->peer = peer;
  link->fd = fd;
  Link& ref = *link;
  links_[static_cast<std::size_t>(peer)] = std::move(link);
  ref.reader = std::thread([this, &ref] { reader_loop(ref); });
  ref.writer = std::thread([this, &ref] { writer_loop(ref); });
}

void SocketEndpoint::reader_loop(Link& link) {
  std::array<std::byte, wire::kHeaderSize> hdr{};
  for (;;) {
    if (!read_all(link.fd, hdr.data(), hdr.size())) break;
    wire::FrameHeader h;
    try {
      h = wire::decode_header(hdr);
    } catch (const Error& e) {
      inbox_.shutdown(e.what());
      return;
    }
    std::vector<std::byte> payload(h.length);
    if (h.length > 0 && !read_all(link.fd, payload.data(), payload.size())) break;
    const auto visible = Clock::now() + cost().delay(payload.size());
    inbox_.push(detail::Envelope{link.peer, h.tag, std::move(payload), visible});
  }
  bool closing;
  {
    std::lock_guard lock(link.mu);
    closing = link.closing;
  }
  if (!closing) inbox_.shutdown("link to rank " + std::to_string(link.peer) + " closed");
}

void SocketEndpoint::writer_loop(Link& link) {
  for (;;) {
    std::pair<std::vector<std::byte>, std::shared_ptr<detail::Request>> item;
    {
      std::unique_lock lock(link.mu);
      link.cv.wait(lock, [&] { return link.closing || !link.outq.empty(); });
      if (link.outq.empty()) return;
      item = std::move(link.outq.front());
      link.outq.pop_front();
    }
    if (!write_all(link.fd, item.first.data(), item.first.size())) {
      inbox_.shutdown("write to rank " + std::to_string(link.peer) + " failed");
      return;
    }
    item.second->complete.store(true, std::memory_order_release);
    inbox_.poke();
  }
}

void SocketEndpoint::transmit(int peer, Tag tag, std::vector<std::byte> payload,
                              const std::shared_ptr<detail::Request>& req) {
  if (peer == rank()) {
    const auto visible = Clock::now() + cost().delay(payload.size());
    inbox_.push(detail::Envelope{peer, tag, std::move(payload), visible});
    req->complete.store(true, std::memory_order_release);
    return;
  }
  auto& link = links_[static_cast<std::size_t>(peer)];
  if (!link) throw Error(Errc::PeerUnreachable, "no link to rank " + std::to_string(peer));
  auto frame = wire::encode_frame(static_cast<std::uint32_t>(rank()), tag, payload);
  {
    std::lock_guard lock(link->mu);
    link->outq.emplace_back(std::move(frame), req);
  }
  link->cv.notify_one();
}

}  // namespace mdmp
