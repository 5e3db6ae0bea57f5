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

#include <cstring>
#include <optional>

#include "mdmp/bench.hpp"
#include "mdmp/error.hpp"

namespace mdmp::bench {

namespace {

constexpr double kScalar = 3.0;
constexpr std::int32_t kIntValue = 7;
constexpr double kAssignValue = 2.0;

struct RawArrays {
  std::vector<std::int32_t> ia;
  std::vector<double> a, b, c;

  explicit RawArrays(std::size_t n) : ia(n, 0), a(n, 1.0), b(n, 2.0), c(n, 0.0) {}

  void kernel(std::size_t k) {
    const std::size_t n = a.size();
    switch (k) {
      case 0: for (std::size_t i = 0; i < n; ++i) ia[i] = kIntValue; break;
      case 1: for (std::size_t i = 0; i < n; ++i) a[i] = kAssignValue; break;
      case 2: for (std::size_t i = 0; i < n; ++i) c[i] = a[i]; break;
      case 3: for (std::size_t i = 0; i < n; ++i) b[i] = kScalar * c[i]; break;
      case 4: for (std::size_t i = 0; i < n; ++i) c[i] = a[i] + b[i]; break;
      case 5: for (std::size_t i = 0; i < n; ++i) a[i] = b[i] + kScalar * c[i]; break;
    }
  }

  std::uint64_t checksum() const {
    return checksum_bytes({bytes(ia.data(), ia.size()), bytes(a.data(), a.size()),
                           bytes(b.data(), b.size()), bytes(c.data(), c.size())});
  }

  template <class T>
  static std::vector<std::byte> bytes(const T* p, std::size_t n) {
    std::vector<std::byte> out(n * sizeof(T));
    std::memcpy(out.data(), p, out.size());
    return out;
  }
};

struct TrackedArrays {
  ManagedBuffer<std::int32_t> ia;
  ManagedBuffer<double> a, b, c;

  TrackedArrays(Runtime& rt, std::size_t n)
      : ia(rt.create_buffer<std::int32_t>(n)),
        a(rt.create_buffer<double>(n)),
        b(rt.create_buffer<double>(n)),
        c(rt.create_buffer<double>(n)) {
    for (std::size_t i = 0; i < n; ++i) {
      a.data()[i] = 1.0;
      b.data()[i] = 2.0;
    }
    rt.track(ia);
    rt.track(a);
    rt.track(b);
    rt.track(c);
  }

  void kernel(std::size_t k) {
    const std::size_t n = a.size();
    switch (k) {
      case 0: for (std::size_t i = 0; i < n; ++i) ia.write(i, kIntValue); break;
      case 1: for (std::size_t i = 0; i < n; ++i) a.write(i, kAssignValue); break;
      case 2: for (std::size_t i = 0; i < n; ++i) c.write(i, a.read(i)); break;
      case 3: for (std::size_t i = 0; i < n; ++i) b.write(i, kScalar * c.read(i)); break;
      case 4: for (std::size_t i = 0; i < n; ++i) c.write(i, a.read(i) + b.read(i)); break;
      case 5: for (std::size_t i = 0; i < n; ++i) a.write(i, b.read(i) + kScalar * c.read(i)); break;
    }
  }

  std::uint64_t counters() const {
    return ia.counter_total() + a.counter_total() + b.counter_total() + c.counter_total();
  }

  std::uint64_t checksum() const {
    const std::size_t n = a.size();
    return checksum_bytes({RawArrays::bytes(ia.data(), n), RawArrays::bytes(a.data(), n),
                           RawArrays::bytes(b.data(), n), RawArrays::bytes(c.data(), n)});
  }
};

template <class Arrays>
void time_kernels(Arrays& arrays, StreamSeries& s, std::size_t k_count) {
  for (std::size_t k = 0; k < k_count; ++k) {
    Stopwatch sw;
    arrays.kernel(k);
    s.samples[k].push_back(sw.seconds());
  }
}

}  // namespace

void StreamConfig::validate() const {
  if (elements == 0) throw Error(Errc::ConfigError, "STREAM needs at least 1 element");
  if (repeats == 0) throw Error(Errc::ConfigError, "repeats must be at least 1");
}

const StreamSeries& StreamResult::get(std::string_view config) const {
  for (const auto& s : series)
    if (s.config == config) return s;
  throw Error(Errc::ConfigError, "no STREAM configuration '" + std::string(config) + "'");
}

StreamResult run_stream(const StreamConfig& cfg) {
  cfg.validate();
  const auto& kernels = stream_kernels();
  StreamResult res;
  res.config = cfg;
  InProcessFabric fabric(1);
  Endpoint& ep = fabric.endpoint(0);

  for (const auto& name : stream_configs()) {
    StreamSeries s;
    s.config = name;
    s.samples.resize(kernels.size());
    if (name == "baseline") {
      RawArrays arr(cfg.elements);
      for (std::size_t r = 0; r < cfg.repeats; ++r) time_kernels(arr, s, kernels.size());
      s.checksum = arr.checksum();
    } else {
      const bool inside = name.starts_with("inside");
      RuntimeOptions opts;
      opts.path = name.ends_with("fast") ? AccessPath::Fast : AccessPath::Generic;
      Runtime rt(ep, opts);
      TrackedArrays arr(rt, cfg.elements);
      std::optional<Region> region;
      if (inside) region = rt.region_begin(ModeHint::Auto);
      for (std::size_t r = 0; r < cfg.repeats; ++r) {
        if (region) region->iteration_begin();
        time_kernels(arr, s, kernels.size());
        if (region) {
          // Counters reset at the next iteration_begin; sample them first.
          if (r + 1 == cfg.repeats) s.counter_updates = arr.counters();
          region->iteration_end();
        }
      }
      if (region) region->end();
      if (!inside) s.counter_updates = arr.counters();
      s.checksum = arr.checksum();
    }
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      const auto st = compute_stats(s.samples[k]);
      s.kernels.push_back(KernelTime{kernels[k], st.mean});
    }
    res.series.push_back(std::move(s));
  }
  return res;
}

}  // namespace mdmp::bench
