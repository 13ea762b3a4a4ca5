// Copyright 2026 The pimtree Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimtree/bench/key_values.hpp"
#include "pimtree/core/workload.hpp"
#include "pimtree/join/config.hpp"

namespace pimtree::bench {

/// Everything needed to generate one workload and run one join.
struct RunConfig {
  EngineConfig engine;
  std::string distribution = "uniform";
  std::optional<Key> diff;
  double target_match_rate = 2.0;
  /// Total arrivals; 0 means warmup + 8 * w.
  std::size_t tuples = 0;
  /// Arrivals excluded from throughput; 0 means 2 * w.
  std::size_t warmup = 0;
  std::uint64_t seed = 1;
  /// Fraction of arrivals that belong to R in a two-way join.
  double stream_share = 0.5;
  std::optional<Key> lo;
  std::optional<Key> hi;
  double mean = 0.5;
  double stddev = 0.125;
  double gamma_shape = 3.0;
  double gamma_scale = 3.0;
  /// Mean shift over the middle phase of the shifting Gaussian.
  double shift = 1.0;
  /// Shifting Gaussian phase lengths as multiples of w.
  std::vector<double> phases{4, 10, 4};
  double domain_width = kDefaultDomainWidth;

  std::size_t w() const { return std::max(engine.window_r, engine.window_s); }
  std::size_t warmup_tuples() const { return warmup ? warmup : 2 * w(); }
  std::size_t total_tuples() const {
    if (distribution == "shifting_gaussian") {
      double n = 0;
      for (double p : phases) n += p * static_cast<double>(w());
      return static_cast<std::size_t>(n);
    }
    return tuples ? tuples : warmup_tuples() + 8 * w();
  }
};

inline std::string normalize_distribution(const std::string& v) {
  const auto t = normalize_token(v);
  if (t == "uniform") return "uniform";
  if (t == "gaussian" || t == "normal") return "gaussian";
  if (t == "gamma") return "gamma";
  if (t == "shiftinggaussian" || t == "shifting") return "shifting_gaussian";
  throw std::invalid_argument("unknown distribution: " + v);
}

/// Sets one configuration key. Throws on unknown keys or bad values.
inline void apply(RunConfig& rc, const std::string& key, const std::string& value) {
  auto num = [&] { return KeyValues::parse_number(key, value); };
  auto size = [&] {
    const double d = num();
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
      throw std::invalid_argument(key + ": expected a non-negative integer");
    return static_cast<std::size_t>(d);
  };
  auto boolean = [&] {
    KeyValues kv;
    kv.set(key, value);
    return *kv.get_bool(key);
  };
  EngineConfig& e = rc.engine;
  if (key == "window_size") e.set_window(size());
  else if (key == "window_r") e.window_r = size();
  else if (key == "window_s") e.window_s = size();
  else if (key == "merge_ratio") e.merge_ratio = num();
  else if (key == "insertion_depth") e.insertion_depth = size();
  else if (key == "fanout" || key == "ib_fanout") e.ib_fanout = size();
  else if (key == "task_size") e.task_size = size();
  else if (key == "threads") e.threads = size();
  else if (key == "index") e.index = parse_index_kind(value);
  else if (key == "chain_length") e.chain_length = size();
  else if (key == "partitions") e.partitions = size();
  else if (key == "join_mode") e.join_mode = parse_join_mode(value);
  else if (key == "merge_mode") e.merge_mode = parse_merge_mode(value);
  else if (key == "concurrency_control") e.concurrency_control = boolean();
  else if (key == "queue_capacity") e.queue_capacity = size();
  else if (key == "pending_capacity") e.pending_capacity = size();
  else if (key == "distribution") rc.distribution = normalize_distribution(value);
  else if (key == "diff") rc.diff = static_cast<Key>(size());
  else if (key == "target_match_rate") rc.target_match_rate = num();
  else if (key == "seed") rc.seed = size();
  else if (key == "tuples") rc.tuples = size();
  else if (key == "warmup") rc.warmup = size();
  else if (key == "stream_share") rc.stream_share = num();
  else if (key == "lo") rc.lo = static_cast<Key>(num());
  else if (key == "hi") rc.hi = static_cast<Key>(num());
  else if (key == "mean") rc.mean = num();
  else if (key == "stddev") rc.stddev = num();
  else if (key == "gamma_shape") rc.gamma_shape = num();
  else if (key == "gamma_scale") rc.gamma_scale = num();
  else if (key == "shift") rc.shift = num();
  else if (key == "domain_width") rc.domain_width = num();
  else if (key == "phases") {
    rc.phases.clear();
    for (const auto& p : KeyValues::split_list(value)) rc.phases.push_back(KeyValues::parse_number(key, p));
    if (rc.phases.size() != 3) throw std::invalid_argument("phases: expected three values");
  } else {
    throw std::invalid_argument("unknown configuration key: " + key);
  }
}

/// Keys in `skip` are left to the caller (experiment-level keys).
inline RunConfig run_config_from(const KeyValues& kv, const std::vector<std::string>& skip = {}) {
  RunConfig rc;
  // Window size first so later keys may refine per-stream windows.
  if (auto w = kv.all().find("window_size"); w != kv.all().end()) apply(rc, w->first, w->second);
  for (const auto& [k, v] : kv.all()) {
    if (k == "window_size" || std::find(skip.begin(), skip.end(), k) != skip.end()) continue;
    apply(rc, k, v);
  }
  return rc;
}

struct Workload {
  std::vector<Tuple> arrivals;
  Key diff = 0;
  std::uint64_t hash = 0;
};

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t workload_hash(const std::vector<Tuple>& arrivals, Key diff) {
  std::uint64_t h = 0xCBF29CE484222325ull ^ static_cast<std::uint64_t>(diff);
  for (const Tuple& t : arrivals) {
    h = (h ^ static_cast<std::uint64_t>(t.key)) * 0x100000001B3ull;
    h = (h ^ static_cast<std::uint64_t>(t.stream)) * 0x100000001B3ull;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline WorkloadSpec workload_spec(const RunConfig& rc, std::size_t count, std::uint64_t seed, Key uniform_lo,
                                  Key uniform_hi) {
  WorkloadSpec spec;
  spec.count = count;
  spec.seed = seed;
  spec.target_match_rate = rc.target_match_rate;
  spec.domain_width = rc.domain_width;
  if (rc.distribution == "uniform") {
    spec.distribution = UniformKeys{uniform_lo, uniform_hi};
  } else if (rc.distribution == "gaussian") {
    spec.distribution = GaussianKeys{rc.mean, rc.stddev};
  } else if (rc.distribution == "gamma") {
    spec.distribution = GammaKeys{rc.gamma_shape, rc.gamma_scale};
  } else {
    ShiftingGaussianKeys sg{rc.mean, rc.stddev, rc.shift, {}};
    std::size_t total = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      sg.phase_lengths[i] = static_cast<std::size_t>(rc.phases[i] * static_cast<double>(rc.w()));
      total += sg.phase_lengths[i];
    }
    sg.phase_lengths[2] += count - std::min(count, total);
    spec.count = sg.phase_lengths[0] + sg.phase_lengths[1] + sg.phase_lengths[2];
    spec.distribution = sg;
  }
  return spec;
}

/// Generates the arrival sequence and settles the band width: explicit diff
/// wins; uniform keys are calibrated analytically, other distributions by
/// sampling.
inline Workload build_workload(const RunConfig& rc) {
  const std::size_t n = rc.total_tuples();
  const bool self = rc.engine.join_mode == JoinMode::SelfJoin;
  const std::size_t w_probe = rc.engine.window_s;  // R probes S
  Key lo = 0, hi = 0;
  Key diff = 0;
  const bool uniform = rc.distribution == "uniform";
  if (uniform) {
    if (rc.lo && rc.hi) {
      lo = *rc.lo;
      hi = *rc.hi;
      diff = rc.diff ? *rc.diff : calibrate_diff(w_probe, lo, hi, rc.target_match_rate);
    } else {
      diff = rc.diff.value_or(1);
      lo = rc.lo.value_or(0);
      hi = lo + calibrate_domain(w_probe, diff, rc.target_match_rate) - 1;
    }
  }

  Workload wl;
  const std::uint64_t base = splitmix(rc.seed);
  if (self) {
    const auto keys = generate_keys(workload_spec(rc, n, base, lo, hi));
    wl.arrivals.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) wl.arrivals.push_back({StreamId::R, static_cast<Seq>(i), keys[i]});
  } else {
    const auto r = generate_keys(workload_spec(rc, n, splitmix(base + 1), lo, hi));
    const auto s = generate_keys(workload_spec(rc, n, splitmix(base + 2), lo, hi));
    const bool even = rc.stream_share == 0.5;
    wl.arrivals = interleave(r, s, rc.stream_share, even ? InterleaveMode::Weighted : InterleaveMode::Random,
                             splitmix(base + 3));
    if (wl.arrivals.size() > n) wl.arrivals.resize(n);
  }

  if (uniform || rc.diff) {
    wl.diff = uniform ? diff : *rc.diff;
  } else {
    // Sample a window's worth of keys from the opposite side after warmup.
    std::vector<Key> window_keys, probes;
    const std::size_t start = std::min(wl.arrivals.size(), rc.warmup_tuples());
    for (std::size_t i = start; i < wl.arrivals.size() && window_keys.size() < w_probe; ++i) {
      const Tuple& t = wl.arrivals[i];
      if (self || t.stream == StreamId::S) window_keys.push_back(t.key);
    }
    for (std::size_t i = start; i < wl.arrivals.size() && probes.size() < 4096; i += 7) probes.push_back(wl.arrivals[i].key);
    if (window_keys.empty()) {
      wl.diff = 0;
    } else {
      const double scale = static_cast<double>(w_probe) / static_cast<double>(window_keys.size());
      wl.diff = calibrate_diff_empirical(window_keys, probes, rc.target_match_rate / scale);
    }
  }
  wl.hash = workload_hash(wl.arrivals, wl.diff);
  return wl;
}

}  // namespace pimtree::bench
