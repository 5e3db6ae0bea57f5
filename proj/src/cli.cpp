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

#include "mdmp/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mdmp/bench.hpp"
#include "mdmp/error.hpp"
#include "mdmp/socket_transport.hpp"

namespace mdmp::cli {

namespace {

using namespace mdmp::bench;

struct Options {
  std::size_t elements = 1024;
  std::size_t selected = 0;
  std::size_t delay = 0;
  std::size_t iters = 100;
  std::size_t repeats = 3;
  std::string mode = "managed";
  std::string elem = "float32";
  std::size_t chunk = 1;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 1;
  std::string output = "-";
  std::string log;
  std::string transport = "inproc";
  int rank = 0;
  std::string peers;
  int connect_timeout_ms = 10000;
  bool log_timestamps = false;

  std::size_t stream_elements = 2'000'000;
  std::size_t stream_repeats = 10;

  std::size_t rows = 64;
  std::size_t cols = 64;
  int ranks = 2;
  std::size_t jacobi_repeats = 1;
  std::string variant = "managed";

  std::vector<std::string> sweep_benchmarks{"delay"};
  std::vector<std::size_t> sweep_delays;
  std::vector<std::size_t> sweep_selected;
  std::vector<std::string> sweep_modes{"bulk", "managed"};
};

std::string num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(9);
  os << v;
  return os.str();
}

ElemKind parse_elem(std::string_view s) {
  if (s == "int32") return ElemKind::Int32;
  if (s == "float32") return ElemKind::Float32;
  if (s == "float64") return ElemKind::Float64;
  throw Error(Errc::ConfigError, "unknown element type '" + std::string(s) + "' (int32, float32, float64)");
}

CostModel cost_of(const Options& o) {
  CostModel c;
  c.alpha = o.alpha;
  c.beta = o.beta;
  c.validate();
  return c;
}

bool use_socket(const Options& o) {
  if (o.transport == "inproc") return false;
  if (o.transport == "socket") {
    if (o.peers.empty()) throw Error(Errc::ConfigError, "--transport socket needs --peers");
    return true;
  }
  throw Error(Errc::ConfigError, "unknown transport '" + o.transport + "' (inproc, socket)");
}

std::unique_ptr<SocketEndpoint> connect_socket(const Options& o, const CostModel& cost, int expected) {
  auto peers = parse_peers(o.peers);
  if (expected > 0 && static_cast<int>(peers.size()) != expected)
    throw Error(Errc::ConfigError, "expected " + std::to_string(expected) + " peers, got " +
                                       std::to_string(peers.size()));
  if (o.rank < 0 || o.rank >= static_cast<int>(peers.size()))
    throw Error(Errc::ConfigError, "--rank " + std::to_string(o.rank) + " outside the peer list");
  auto ep = std::make_unique<SocketEndpoint>(o.rank, std::move(peers), cost);
  ep->connect(std::chrono::milliseconds(o.connect_timeout_ms));
  return ep;
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path != "-" && !path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(Errc::ConfigError, "cannot open '" + path + "' for writing");
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

struct RowKey {
  std::string benchmark, mode, transport;
  std::size_t elements, selected, delay_elems, chunk, iterations;
  CostModel cost;
};

void write_rows(std::ostream& os, const RowKey& k, const std::vector<RepeatStats>& reps) {
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& s = reps[r];
    os << k.benchmark << ',' << k.mode << ',' << k.transport << ',' << k.elements << ','
       << k.selected << ',' << k.delay_elems << ',' << k.chunk << ',' << k.iterations << ','
       << r + 1 << ',' << num(k.cost.alpha) << ',' << num(k.cost.beta) << ','
       << num(s.wall_time_s) << ',' << num(s.msgs_per_iter) << ',' << num(s.bytes_per_iter)
       << ',' << s.demotions << '\n';
  }
}

void write_log(const std::string& path, MessageLog log) {
  if (path.empty()) return;
  log.sort_canonical();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ConfigError, "cannot open '" + path + "' for writing");
  log.write_csv(f);
}

BenchConfig pingpong_config(const Options& o, PingPongKind kind) {
  BenchConfig c;
  c.kind = kind;
  c.elements = o.elements;
  c.selected = o.selected;
  c.delay_elems = o.delay;
  c.iterations = o.iters;
  c.repeats = o.repeats;
  c.mode = parse_mode(o.mode);
  c.chunk = o.chunk;
  c.elem = parse_elem(o.elem);
  c.cost = cost_of(o);
  c.seed = o.seed;
  c.log_timestamps = o.log_timestamps;
  return c;
}

BenchResult pingpong_any(const BenchConfig& cfg, const Options& o) {
  if (!use_socket(o)) return run_pingpong(cfg);
  cfg.validate();
  auto ep = connect_socket(o, cfg.cost, 2);
  BenchResult res;
  res.config = cfg;
  res.ranks.push_back(pingpong_rank(cfg, *ep));
  ep->barrier();
  std::vector<double> walls;
  for (const auto& s : res.ranks[0].repeats) walls.push_back(s.wall_time_s);
  res.timing = compute_stats(walls);
  res.checksum = checksum_bytes(res.ranks[0].buffers);
  return res;
}

void emit_pingpong(std::ostream& os, const BenchConfig& cfg, const Options& o, MessageLog* log) {
  const auto res = pingpong_any(cfg, o);
  const bool delayed = cfg.kind == PingPongKind::Delay || cfg.kind == PingPongKind::SelectiveDelay;
  RowKey k{std::string(to_string(cfg.kind)), std::string(to_string(cfg.mode)), o.transport,
           cfg.elements, cfg.communicated(), delayed ? cfg.delay_elems : 0, cfg.chunk,
           cfg.iterations, cfg.cost};
  write_rows(os, k, res.repeats());
  if (log) log->merge(res.merged_log());
}

int cmd_pingpong(const Options& o, PingPongKind kind, std::ostream& out) {
  const auto cfg = pingpong_config(o, kind);
  cfg.validate();
  Sink sink(o.output, out);
  *sink << kCsvHeader << '\n';
  MessageLog log;
  emit_pingpong(*sink, cfg, o, &log);
  write_log(o.log, log);
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  std::vector<PingPongKind> kinds;
  for (const auto& b : o.sweep_benchmarks) kinds.push_back(parse_pingpong_kind(b));
  std::vector<BenchMode> modes;
  for (const auto& m : o.sweep_modes) modes.push_back(parse_mode(m));
  if (kinds.empty() || modes.empty()) throw Error(Errc::ConfigError, "sweep needs a benchmark and a mode");

  // Check every point before running any of them.
  std::vector<BenchConfig> points;
  for (auto kind : kinds) {
    const bool selective = kind == PingPongKind::Selective || kind == PingPongKind::SelectiveDelay;
    const bool delayed = kind == PingPongKind::Delay || kind == PingPongKind::SelectiveDelay;
    if (selective && o.sweep_selected.empty())
      throw Error(Errc::ConfigError, std::string(to_string(kind)) + " sweep needs --selected");
    const std::vector<std::size_t> sels = selective ? o.sweep_selected : std::vector<std::size_t>{0};
    const std::vector<std::size_t> ds =
        delayed && !o.sweep_delays.empty() ? o.sweep_delays : std::vector<std::size_t>{0};
    for (auto s : sels)
      for (auto d : ds)
        for (auto m : modes) {
          auto c = pingpong_config(o, kind);
          c.selected = s;
          c.delay_elems = d;
          c.mode = m;
          c.validate();
          points.push_back(c);
        }
  }
  Sink sink(o.output, out);
  *sink << kCsvHeader << '\n';
  MessageLog log;
  for (const auto& c : points) emit_pingpong(*sink, c, o, o.log.empty() ? nullptr : &log);
  write_log(o.log, log);
  return 0;
}

int cmd_stream(const Options& o, std::ostream& out) {
  StreamConfig cfg;
  cfg.elements = o.stream_elements;
  cfg.repeats = o.stream_repeats;
  cfg.validate();
  const auto res = run_stream(cfg);
  const auto& base = res.get("baseline");
  Sink sink(o.output, out);
  *sink << kStreamCsvHeader << '\n';
  for (const auto& s : res.series) {
    const auto ratios = overhead_ratio(s.kernels, base.kernels);
    for (std::size_t k = 0; k < s.kernels.size(); ++k)
      *sink << s.config << ',' << s.kernels[k].kernel << ',' << cfg.repeats << ',' << cfg.elements
            << ',' << num(s.kernels[k].mean_s) << ',' << num(ratios[k].ratio) << ','
            << s.counter_updates << '\n';
  }
  return 0;
}

int cmd_jacobi(const Options& o, std::ostream& out) {
  JacobiConfig cfg;
  cfg.rows = o.rows;
  cfg.cols = o.cols;
  cfg.ranks = o.ranks;
  cfg.maxiter = o.iters;
  cfg.repeats = o.jacobi_repeats;
  cfg.seed = o.seed;
  cfg.variant = parse_variant(o.variant);
  cfg.mode = parse_mode(o.mode);
  if (cfg.variant != JacobiVariant::Managed) cfg.mode = BenchMode::Bulk;
  cfg.chunk = o.chunk;
  cfg.cost = cost_of(o);
  cfg.log_timestamps = o.log_timestamps;

  std::vector<RepeatStats> reps;
  MessageLog log;
  if (use_socket(o)) {
    cfg.ranks = static_cast<int>(parse_peers(o.peers).size());
    cfg.validate();
    auto ep = connect_socket(o, cfg.cost, cfg.ranks);
    auto r = jacobi_rank(cfg, *ep);
    ep->barrier();
    reps = r.repeats;
    log = std::move(r.log);
  } else {
    cfg.validate();
    auto res = run_jacobi(cfg);
    reps = res.ranks.at(0).repeats;
    log = res.merged_log();
  }
  Sink sink(o.output, out);
  *sink << kCsvHeader << '\n';
  RowKey k{"jacobi-" + std::string(to_string(cfg.variant)), std::string(to_string(cfg.mode)),
           o.transport, cfg.rows * cfg.cols, cfg.cols, 0, cfg.chunk, cfg.maxiter, cfg.cost};
  write_rows(*sink, k, reps);
  write_log(o.log, log);
  return 0;
}

void add_transport(CLI::App* sc, Options& o) {
  sc->add_option("--transport", o.transport, "inproc or socket")->capture_default_str();
  sc->add_option("--rank", o.rank, "this process's rank (socket transport)");
  sc->add_option("--peers", o.peers, "host:port per rank, comma separated (socket transport)");
  sc->add_option("--connect-timeout-ms", o.connect_timeout_ms, "how long to dial lower ranks")
      ->capture_default_str();
}

void add_run(CLI::App* sc, Options& o) {
  sc->add_option("--iters", o.iters, "iterations per repeat")->capture_default_str();
  sc->add_option("--chunk", o.chunk, "elements per managed message")->capture_default_str();
  sc->add_option("--alpha", o.alpha, "per-message latency in seconds")->capture_default_str();
  sc->add_option("--beta", o.beta, "per-byte cost in seconds")->capture_default_str();
  sc->add_option("--seed", o.seed, "data seed")->capture_default_str();
  sc->add_option("--output", o.output, "CSV path, - for stdout")->capture_default_str();
  sc->add_option("--log", o.log, "write the message log CSV here");
  sc->add_flag("--log-timestamps", o.log_timestamps, "record issue and completion times");
  add_transport(sc, o);
}

void add_pingpong(CLI::App* sc, Options& o, bool selective, bool delayed) {
  sc->add_option("--elements", o.elements, "buffer length")->capture_default_str();
  if (selective) sc->add_option("--selected", o.selected, "elements communicated")->required();
  if (delayed) sc->add_option("--delay", o.delay, "delay loop length per element")->capture_default_str();
  sc->add_option("--repeats", o.repeats, "repeats")->capture_default_str();
  sc->add_option("--mode", o.mode, "bulk, passthrough or managed")->capture_default_str();
  sc->add_option("--elem", o.elem, "int32, float32 or float64")->capture_default_str();
  add_run(sc, o);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"mdmp benchmark driver"};
  app.require_subcommand(1);

  struct PP {
    const char* name;
    PingPongKind kind;
    bool selective, delayed;
  };
  const PP pps[] = {{"pingpong", PingPongKind::Plain, false, false},
                    {"selective", PingPongKind::Selective, true, false},
                    {"delay", PingPongKind::Delay, false, true},
                    {"selective-delay", PingPongKind::SelectiveDelay, true, true}};
  std::vector<std::pair<CLI::App*, PingPongKind>> pp_cmds;
  for (const auto& p : pps) {
    auto* sc = app.add_subcommand(p.name, std::string("run the ") + p.name + " benchmark");
    add_pingpong(sc, o, p.selective, p.delayed);
    pp_cmds.emplace_back(sc, p.kind);
  }

  auto* stream = app.add_subcommand("stream", "tracking overhead on STREAM kernels");
  stream->add_option("--elements", o.stream_elements, "array length")->capture_default_str();
  stream->add_option("--repeats", o.stream_repeats, "repeats")->capture_default_str();
  stream->add_option("--output", o.output, "CSV path, - for stdout")->capture_default_str();

  auto* jacobi = app.add_subcommand("jacobi", "2-D Jacobi with a row decomposition");
  jacobi->add_option("--rows", o.rows, "global interior rows")->capture_default_str();
  jacobi->add_option("--cols", o.cols, "global interior columns")->capture_default_str();
  jacobi->add_option("--ranks", o.ranks, "ranks (in-process transport)")->capture_default_str();
  jacobi->add_option("--repeats", o.jacobi_repeats, "repeats")->capture_default_str();
  jacobi->add_option("--variant", o.variant, "bulk, hand or managed")->capture_default_str();
  jacobi->add_option("--mode", o.mode, "passthrough or managed (managed variant)")->capture_default_str();
  add_run(jacobi, o);

  auto* sweep = app.add_subcommand("sweep", "cartesian sweep over the PingPong family");
  sweep->add_option("--benchmark", o.sweep_benchmarks, "benchmarks")->delimiter(',')->capture_default_str();
  sweep->add_option("--elements", o.elements, "buffer length")->capture_default_str();
  sweep->add_option("--delay", o.sweep_delays, "delay values")->delimiter(',');
  sweep->add_option("--selected", o.sweep_selected, "selected values")->delimiter(',');
  sweep->add_option("--modes", o.sweep_modes, "modes")->delimiter(',')->capture_default_str();
  sweep->add_option("--repeats", o.repeats, "repeats")->capture_default_str();
  sweep->add_option("--elem", o.elem, "int32, float32 or float64")->capture_default_str();
  add_run(sweep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const auto& [sc, kind] : pp_cmds)
      if (sc->parsed()) return cmd_pingpong(o, kind, out);
    if (stream->parsed()) return cmd_stream(o, out);
    if (jacobi->parsed()) return cmd_jacobi(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
  } catch (const Error& e) {
    err << "mdmp: " << e.what() << '\n';
    return e.code() == Errc::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "mdmp: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mdmp::cli
