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

// 2-D Jacobi sweep with a 1-D row decomposition. Each rank owns MP interior
// rows of N columns plus one halo row above and below; local arrays are
// (MP+2) x (N+2), row-major.
//
// Every variant starts with halo rows already holding the neighbours' initial
// boundary rows (they are generated from the same seed), so the exchange can
// sit either before the sweep (Bulk) or after the copy-back (the others).

#include <cstring>
#include <random>

#include "mdmp/bench.hpp"
#include "mdmp/error.hpp"

namespace mdmp::bench {

std::string_view to_string(JacobiVariant v) {
  switch (v) {
    case JacobiVariant::Bulk: return "bulk";
    case JacobiVariant::HandIntermingled: return "hand";
    case JacobiVariant::Managed: return "managed";
  }
  return "?";
}

JacobiVariant parse_variant(std::string_view s) {
  if (s == "bulk") return JacobiVariant::Bulk;
  if (s == "hand" || s == "hand-intermingled") return JacobiVariant::HandIntermingled;
  if (s == "managed") return JacobiVariant::Managed;
  throw Error(Errc::ConfigError, "unknown Jacobi variant '" + std::string(s) + "' (bulk, hand, managed)");
}

void JacobiConfig::validate() const {
  if (ranks < 1) throw Error(Errc::ConfigError, "Jacobi needs at least 1 rank");
  if (rows == 0 || cols == 0) throw Error(Errc::ConfigError, "grid must be at least 1x1");
  if (rows % static_cast<std::size_t>(ranks) != 0)
    throw Error(Errc::ConfigError, std::to_string(rows) + " rows do not split evenly over " +
                                       std::to_string(ranks) + " ranks");
  if (maxiter == 0) throw Error(Errc::ConfigError, "maxiter must be at least 1");
  if (repeats == 0) throw Error(Errc::ConfigError, "repeats must be at least 1");
  if (chunk == 0) throw Error(Errc::ConfigError, "chunk must be at least 1");
  if (variant == JacobiVariant::Managed && mode == BenchMode::Bulk)
    throw Error(Errc::ConfigError, "the managed Jacobi variant runs in passthrough or managed mode");
  cost.validate();
}

namespace {

std::vector<float> generate_row(std::uint64_t seed, std::uint64_t stream, std::size_t row,
                                std::size_t cols) {
  std::mt19937_64 g(seed * 0x9E3779B97F4A7C15ull ^ (row + 1) * 0xBF58476D1CE4E5B9ull ^ stream);
  std::vector<float> v(cols + 2);
  for (auto& x : v) x = static_cast<float>(g() >> 40) * (1.0f / 16777216.0f);
  return v;
}

struct Grid {
  std::size_t mp, np, w;
  int prev, next;
  std::vector<float> init;  // (mp+2) x w
  std::vector<float> edge;

  Grid(const JacobiConfig& c, int rank)
      : mp(c.rows_per_rank()),
        np(c.cols),
        w(c.cols + 2),
        prev(rank > 0 ? rank - 1 : NULL_RANK),
        next(rank + 1 < c.ranks ? rank + 1 : NULL_RANK),
        init((mp + 2) * w),
        edge((mp + 2) * w) {
    for (std::size_t r = 0; r < mp + 2; ++r) {
      const std::size_t global = static_cast<std::size_t>(rank) * mp + r;
      auto o = jacobi_initial_row(c.seed, global, np);
      auto e = jacobi_edge_row(c.seed, global, np);
      std::copy(o.begin(), o.end(), init.begin() + static_cast<std::ptrdiff_t>(r * w));
      std::copy(e.begin(), e.end(), edge.begin() + static_cast<std::ptrdiff_t>(r * w));
    }
  }

  std::size_t at(std::size_t i, std::size_t j) const { return i * w + j; }

  std::vector<float> interior(const float* old) const {
    std::vector<float> out;
    out.reserve(mp * np);
    for (std::size_t i = 1; i <= mp; ++i)
      out.insert(out.end(), old + at(i, 1), old + at(i, 1) + np);
    return out;
  }
};

inline float stencil(float up, float down, float left, float right, float e) {
  return 0.25f * (up + down + left + right - e);
}

std::span<const std::byte> as_bytes(const float* p, std::size_t n) {
  return {reinterpret_cast<const std::byte*>(p), n * sizeof(float)};
}

struct Logger {
  MessageLog log;
  int rank;
  bool stamps;
  void note(std::size_t it, Direction dir, int peer, Tag tag, MessageKind kind, std::size_t off,
            std::size_t n) {
    LogEntry e;
    e.rank = rank;
    e.iteration = it + 1;
    e.direction = dir;
    e.peer = peer;
    e.tag = tag;
    e.kind = kind;
    e.offset = static_cast<std::uint32_t>(off);
    e.elements = static_cast<std::uint32_t>(n);
    e.bytes = n * sizeof(float);
    if (stamps) e.issue_ns = e.complete_ns = monotonic_ns();
    log.append(e);
  }
};

double bulk_run(const JacobiConfig& c, Endpoint& ep, const Grid& g, std::vector<float>& old,
                Logger& lg) {
  std::vector<float> nw(old.size());
  const auto& edge = g.edge;
  ep.barrier();
  Stopwatch sw;
  for (std::size_t it = 0; it < c.maxiter; ++it) {
    CommHandle req[4] = {
        ep.irecv(g.prev, 1, g.np * sizeof(float)),
        ep.irecv(g.next, 2, g.np * sizeof(float)),
        ep.isend(g.next, 1, as_bytes(&old[g.at(g.mp, 1)], g.np)),
        ep.isend(g.prev, 2, as_bytes(&old[g.at(1, 1)], g.np)),
    };
    ep.wait_all(req);
    if (g.prev != NULL_RANK) {
      std::memcpy(&old[g.at(0, 1)], req[0].payload().data(), g.np * sizeof(float));
      lg.note(it, Direction::Recv, g.prev, 1, MessageKind::Bulk, 0, g.np);
      lg.note(it, Direction::Send, g.prev, 2, MessageKind::Bulk, 0, g.np);
    }
    if (g.next != NULL_RANK) {
      std::memcpy(&old[g.at(g.mp + 1, 1)], req[1].payload().data(), g.np * sizeof(float));
      lg.note(it, Direction::Recv, g.next, 2, MessageKind::Bulk, 0, g.np);
      lg.note(it, Direction::Send, g.next, 1, MessageKind::Bulk, 0, g.np);
    }
    for (std::size_t i = 1; i <= g.mp; ++i)
      for (std::size_t j = 1; j <= g.np; ++j)
        nw[g.at(i, j)] = stencil(old[g.at(i - 1, j)], old[g.at(i + 1, j)], old[g.at(i, j - 1)],
                                 old[g.at(i, j + 1)], edge[g.at(i, j)]);
    for (std::size_t i = 1; i <= g.mp; ++i)
      for (std::size_t j = 1; j <= g.np; ++j) old[g.at(i, j)] = nw[g.at(i, j)];
  }
  return sw.seconds();
}

double hand_run(const JacobiConfig& c, Endpoint& ep, const Grid& g, std::vector<float>& old,
                Logger& lg) {
  std::vector<float> nw(old.size());
  const auto& edge = g.edge;
  std::vector<CommHandle> reqs;
  std::vector<CommHandle> from_prev(g.np), from_next(g.np);
  ep.barrier();
  Stopwatch sw;
  for (std::size_t it = 0; it < c.maxiter; ++it) {
    reqs.clear();
    for (std::size_t j = 0; j < g.np; ++j) {
      from_prev[j] = ep.irecv(g.prev, 1, sizeof(float));
      from_next[j] = ep.irecv(g.next, 2, sizeof(float));
    }
    for (std::size_t i = 1; i <= g.mp; ++i) {
      for (std::size_t j = 1; j <= g.np; ++j) {
        nw[g.at(i, j)] = stencil(old[g.at(i - 1, j)], old[g.at(i + 1, j)], old[g.at(i, j - 1)],
                                 old[g.at(i, j + 1)], edge[g.at(i, j)]);
        // Two independent tests so a single-row rank feeds both neighbours.
        if (i == g.mp && g.next != NULL_RANK) {
          reqs.push_back(ep.isend(g.next, 1, as_bytes(&nw[g.at(i, j)], 1)));
          lg.note(it, Direction::Send, g.next, 1, MessageKind::Element, j - 1, 1);
        }
        if (i == 1 && g.prev != NULL_RANK) {
          reqs.push_back(ep.isend(g.prev, 2, as_bytes(&nw[g.at(i, j)], 1)));
          lg.note(it, Direction::Send, g.prev, 2, MessageKind::Element, j - 1, 1);
        }
      }
    }
    for (std::size_t i = 1; i <= g.mp; ++i)
      for (std::size_t j = 1; j <= g.np; ++j) old[g.at(i, j)] = nw[g.at(i, j)];
    ep.wait_all(reqs);
    ep.wait_all(from_prev);
    ep.wait_all(from_next);
    if (g.prev != NULL_RANK) {
      for (std::size_t j = 1; j <= g.np; ++j) {
        std::memcpy(&old[g.at(0, j)], from_prev[j - 1].payload().data(), sizeof(float));
        lg.note(it, Direction::Recv, g.prev, 1, MessageKind::Element, j - 1, 1);
      }
    }
    if (g.next != NULL_RANK) {
      for (std::size_t j = 1; j <= g.np; ++j) {
        std::memcpy(&old[g.at(g.mp + 1, j)], from_next[j - 1].payload().data(), sizeof(float));
        lg.note(it, Direction::Recv, g.next, 2, MessageKind::Element, j - 1, 1);
      }
    }
  }
  return sw.seconds();
}

double managed_run(const JacobiConfig& c, Endpoint& ep, const Grid& g, std::vector<float>& out,
                   MessageLog& log, std::vector<RegionReport>& reports, std::size_t& demotions) {
  RuntimeOptions opts;
  opts.path = c.path;
  opts.chunking.chunk = c.chunk;
  opts.log_timestamps = c.log_timestamps;
  Runtime rt(ep, opts);
  auto old = rt.create_buffer<float>(out.size());
  std::memcpy(old.data(), out.data(), out.size() * sizeof(float));
  std::vector<float> nw(out.size());
  const auto& edge = g.edge;

  Region region = rt.region_begin(c.mode == BenchMode::Managed ? ModeHint::Auto : ModeHint::Passthrough);
  auto directives = [&] {
    region.post_recv(old, g.at(0, 1), g.np, g.prev);
    region.post_recv(old, g.at(g.mp + 1, 1), g.np, g.next);
    region.post_send(old, g.at(g.mp, 1), g.np, g.next);
    region.post_send(old, g.at(1, 1), g.np, g.prev);
  };
  directives();

  ep.barrier();
  Stopwatch sw;
  for (std::size_t it = 0; it < c.maxiter; ++it) {
    region.iteration_begin();
    for (std::size_t i = 1; i <= g.mp; ++i) {
      for (std::size_t j = 1; j <= g.np; ++j) {
        const float up = old.read(g.at(i - 1, j));
        const float down = old.read(g.at(i + 1, j));
        const float left = old.read(g.at(i, j - 1));
        const float right = old.read(g.at(i, j + 1));
        nw[g.at(i, j)] = stencil(up, down, left, right, edge[g.at(i, j)]);
      }
    }
    for (std::size_t i = 1; i <= g.mp; ++i)
      for (std::size_t j = 1; j <= g.np; ++j) old.write(g.at(i, j), nw[g.at(i, j)]);
    directives();
    region.iteration_end();
  }
  const double wall = sw.seconds();
  RegionReport report = region.end();
  demotions = report.demotions.size();
  reports = {std::move(report)};
  log = rt.take_log();
  std::memcpy(out.data(), old.data(), out.size() * sizeof(float));
  return wall;
}

}  // namespace

std::vector<float> jacobi_initial_row(std::uint64_t seed, std::size_t global_row, std::size_t cols) {
  return generate_row(seed, 0x0123456789ull, global_row, cols);
}

std::vector<float> jacobi_edge_row(std::uint64_t seed, std::size_t global_row, std::size_t cols) {
  return generate_row(seed, 0xED6Eull << 32, global_row, cols);
}

JacobiRankOutcome jacobi_rank(const JacobiConfig& cfg, Endpoint& ep) {
  cfg.validate();
  if (ep.size() != cfg.ranks)
    throw Error(Errc::ConfigError, "Jacobi configured for " + std::to_string(cfg.ranks) +
                                       " ranks but the transport has " + std::to_string(ep.size()));
  const Grid g(cfg, ep.rank());
  JacobiRankOutcome out;
  out.rank = ep.rank();
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    std::vector<float> old = g.init;
    Logger lg{MessageLog{}, ep.rank(), cfg.log_timestamps};
    RepeatStats rs;
    switch (cfg.variant) {
      case JacobiVariant::Bulk:
        rs.wall_time_s = bulk_run(cfg, ep, g, old, lg);
        out.log = std::move(lg.log);
        break;
      case JacobiVariant::HandIntermingled:
        rs.wall_time_s = hand_run(cfg, ep, g, old, lg);
        out.log = std::move(lg.log);
        break;
      case JacobiVariant::Managed:
        rs.wall_time_s = managed_run(cfg, ep, g, old, out.log, out.reports, rs.demotions);
        break;
    }
    std::size_t msgs = 0, bytes = 0;
    for (const auto& e : out.log.entries())
      if (e.direction == Direction::Send) {
        ++msgs;
        bytes += e.bytes;
      }
    rs.msgs_per_iter = static_cast<double>(msgs) / static_cast<double>(cfg.maxiter);
    rs.bytes_per_iter = static_cast<double>(bytes) / static_cast<double>(cfg.maxiter);
    out.wall_times.push_back(rs.wall_time_s);
    out.repeats.push_back(rs);
    out.interior = g.interior(old.data());
  }
  return out;
}

std::vector<float> JacobiResult::interior() const {
  std::vector<float> out;
  for (const auto& r : ranks) out.insert(out.end(), r.interior.begin(), r.interior.end());
  return out;
}

MessageLog JacobiResult::merged_log() const {
  MessageLog out;
  for (const auto& r : ranks) out.merge(r.log);
  return out;
}

JacobiResult run_jacobi(const JacobiConfig& cfg) {
  cfg.validate();
  JacobiResult res;
  res.config = cfg;
  res.ranks.resize(static_cast<std::size_t>(cfg.ranks));
  run_ranks(cfg.ranks, cfg.cost, [&](int r, Endpoint& ep) {
    res.ranks[static_cast<std::size_t>(r)] = jacobi_rank(cfg, ep);
  });
  res.timing = compute_stats(res.ranks[0].wall_times);
  const auto all = res.interior();
  std::vector<std::byte> bytes(all.size() * sizeof(float));
  std::memcpy(bytes.data(), all.data(), bytes.size());
  res.checksum = checksum_bytes({bytes});
  return res;
}

}  // namespace mdmp::bench
