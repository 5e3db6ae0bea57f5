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

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mdmp/transport.hpp"

namespace mdmp {

struct PeerAddress {
  std::string host;
  std::uint16_t port = 0;

  /// "host:port"; throws ConfigError when malformed.
  static PeerAddress parse(std::string_view text);
};

/// Comma-separated list of host:port, one per rank in rank order.
std::vector<PeerAddress> parse_peers(std::string_view csv);

/// One rank per process over TCP. Every rank listens on its own address;
/// a rank dials all lower ranks and accepts the higher ones, announcing itself
/// with an empty frame whose sender field carries its rank. With two ranks this
/// is simply: rank 0 listens, rank 1 connects.
///
/// The CostModel delay is added on the receiving side on top of the physical
/// latency.
class SocketEndpoint final : public Endpoint {
 public:
  /// Binds the listener at peers[rank]. Port 0 picks an ephemeral port, which
  /// listen_port() reports.
  SocketEndpoint(int rank, std::vector<PeerAddress> peers, CostModel cost = {});
  ~SocketEndpoint() override;

  std::uint16_t listen_port() const { return listen_port_; }
  void set_peer(int rank, PeerAddress addr);

  /// Blocks until a link to every other rank is up. PeerUnreachable when a
  /// lower rank cannot be dialled before the timeout.
  void connect(std::chrono::milliseconds timeout = std::chrono::seconds(10));

 protected:
  void transmit(int peer, Tag tag, std::vector<std::byte> payload,
                const std::shared_ptr<detail::Request>& req) override;

 private:
  struct Link;

  void start_link(int peer, int fd);
  void reader_loop(Link& link);
  void writer_loop(Link& link);

  std::vector<PeerAddress> peers_;
  int listen_fd_ = -1;
  std::uint16_t listen_port_ = 0;
  std::vector<std::unique_ptr<Link>> links_;
};

}  // namespace mdmp
