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
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "pimtree/bench/run_config.hpp"
#include "pimtree/btree.hpp"
#include "pimtree/cost_model.hpp"
#include "pimtree/imtree.hpp"
#include "pimtree/immutable_btree.hpp"
#include "pimtree/pimtree.hpp"

namespace pimtree::bench {

/// Distribution of middle-phase inserts over the subindexes of T_I.
struct SkewReport {
  /// Share of a merge epoch's middle-phase inserts that went to its most
  /// loaded subindex, averaged over epochs weighted by insert count.
  double top_share = 0;
  /// Most-loaded subindex count over the mean count, same weighting.
  double max_over_mean = 0;
  /// Rank-wise average of the normalized per-epoch histograms, descending.
  std::vector<double> ranked_shares;
  std::size_t subindexes = 0;
  std::size_t phase2_inserts = 0;
  std::size_t merges = 0;
  double seconds = 0;
  std::uint64_t hash = 0;
};

/// Feeds a shifting-Gaussian self-join stream into a PIM-Tree (insert and
/// merge only, no probes) and records which subindex each middle-phase
/// insert lands in.
inline SkewReport insert_skew(const RunConfig& rc) {
  RunConfig cfg = rc;
  cfg.distribution = "shifting_gaussian";
  cfg.engine.join_mode = JoinMode::SelfJoin;
  const std::size_t w = cfg.w();
  const WorkloadSpec spec = workload_spec(cfg, cfg.total_tuples(), splitmix(cfg.seed), 0, 0);
  const auto& phases = std::get<ShiftingGaussianKeys>(spec.distribution).phase_lengths;
  const std::size_t p2_begin = phases[0];
  const std::size_t p2_end = phases[0] + phases[1];
  const std::vector<Key> keys = generate_keys(spec);
  std::vector<Tuple> stream;
  stream.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) stream.push_back({StreamId::R, static_cast<Seq>(i), keys[i]});

  PimTree<NullMutex> pim(w, cfg.engine.merge_ratio, cfg.engine.insertion_depth, cfg.engine.ib_fanout);
  SkewReport rep;
  rep.hash = workload_hash(stream, 0);
  stream.clear();
  std::vector<std::size_t> counts(pim.subindex_count(), 0);
  std::vector<double> ranked;
  double weight = 0;

  auto close_epoch = [&] {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) return;
    std::vector<std::size_t> sorted = counts;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double t = static_cast<double>(total);
    const double top = static_cast<double>(sorted.front()) / t;
    rep.top_share += top * t;
    rep.max_over_mean += top * static_cast<double>(counts.size()) * t;
    if (ranked.size() < sorted.size()) ranked.resize(sorted.size(), 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) ranked[i] += static_cast<double>(sorted[i]);
    weight += t;
    rep.subindexes = std::max(rep.subindexes, counts.size());
  };

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const Seq seq = static_cast<Seq>(i);
    if (i >= p2_begin && i < p2_end) {
      ++counts[pim.route(keys[i])];
      ++rep.phase2_inserts;
    }
    if (pim.insert({keys[i], seq})) {
      close_epoch();
      pim.merge(seq_at_least(seq + 1 - static_cast<Seq>(w)));
      ++rep.merges;
      counts.assign(pim.subindex_count(), 0);
    }
  }
  close_epoch();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (weight > 0) {
    rep.top_share /= weight;
    rep.max_over_mean /= weight;
    for (double& r : ranked) r /= weight;
  }
  rep.ranked_shares = std::move(ranked);
  return rep;
}

/// Seconds to build the merged T_S from a T_S of `n` live entries and a
/// T_I of n/8 entries. Each sample starts with the inputs evicted from the
/// private caches, as in a running join where merges are separated by
/// m * w join steps. Median of `reps` samples.
inline double merge_time(std::size_t n, std::size_t reps = 9, std::uint64_t seed = 1,
                         std::size_t evict_bytes = 16u << 20) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Key> dist(0, static_cast<Key>(4 * n));
  ImTree<> tree(n, 0.125);
  std::vector<Entry> base;
  base.reserve(n);
  for (std::size_t i = 0; i < n; ++i) base.push_back({dist(rng), static_cast<Seq>(i)});
  std::sort(base.begin(), base.end());
  tree.install(ImmutableTree::build(std::move(base)));
  for (std::size_t i = 0; i < n / 8; ++i) tree.insert({dist(rng), static_cast<Seq>(n + i)});

  std::vector<std::uint64_t> scratch(evict_bytes / sizeof(std::uint64_t), 1);
  volatile std::uint64_t sink = 0;
  auto all = [](const Entry&) { return true; };
  std::vector<double> samples;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, reps); ++r) {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < scratch.size(); i += 8) acc += scratch[i]++;
    sink = sink + acc;
    const auto t0 = std::chrono::steady_clock::now();
    auto t = tree.merged(all);
    samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (t.size() != n + n / 8) throw std::logic_error("merge lost entries");
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

/// Least-squares slope of log(y) over log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Per-node costs measured on the concrete trees: each operation's time
/// divided by the height it traverses. tau_c is the per-entry leaf scan
/// cost.
inline cost::CostParams calibrate_lambdas(std::size_t w, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Key> dist(0, static_cast<Key>(4 * w));
  MutableBTree<> tree;
  std::vector<Entry> entries;
  entries.reserve(w);
  for (std::size_t i = 0; i < w; ++i) {
    entries.push_back({dist(rng), static_cast<Seq>(i)});
    tree.insert(entries.back());
  }
  std::vector<Entry> sorted = entries;
  std::sort(sorted.begin(), sorted.end());
  const ImmutableTree ib = ImmutableTree::build(sorted);

  const std::size_t ops = std::max<std::size_t>(w, 1u << 16);
  std::vector<Key> probes(ops);
  for (auto& k : probes) k = dist(rng);
  using Clock = std::chrono::steady_clock;
  auto secs = [](Clock::time_point a) { return std::chrono::duration<double>(Clock::now() - a).count(); };
  volatile std::size_t sink = 0;

  auto t0 = Clock::now();
  for (Key k : probes) sink = sink + tree.lower_bound(k).pos;
  const double search_b = secs(t0) / static_cast<double>(ops);

  t0 = Clock::now();
  for (Key k : probes) sink = sink + ib.lower_bound(k);
  const double search_ib = secs(t0) / static_cast<double>(ops);

  // Delete the oldest and insert a fresh entry, keeping the size at w.
  std::vector<Entry> fresh(ops);
  for (std::size_t i = 0; i < ops; ++i) fresh[i] = {probes[i], static_cast<Seq>(w + i)};
  double ins = 0, del = 0;
  std::size_t oldest = 0;
  std::vector<Entry> ring = entries;
  for (std::size_t i = 0; i < ops; ++i) {
    t0 = Clock::now();
    tree.erase(ring[oldest]);
    del += secs(t0);
    t0 = Clock::now();
    tree.insert(fresh[i]);
    ins += secs(t0);
    ring[oldest] = fresh[i];
    oldest = (oldest + 1) % w;
  }

  std::size_t scanned = 0;
  t0 = Clock::now();
  for (std::size_t i = 0; i < ops / 16; ++i)
    ib.range_scan({probes[i], probes[i] + 64}, [](const Entry&) { return true; }, [&](const Entry&) { ++scanned; });
  const double scan = secs(t0);

  cost::CostParams p;
  p.w = static_cast<double>(w);
  const double h_b = std::max(1.0, cost::height_b(p));
  const double h_ib = std::max(1.0, std::log(static_cast<double>(w)) / std::log(p.f_ib));
  p.lambda_b_s = search_b / h_b;
  p.lambda_b_i = ins / static_cast<double>(ops) / h_b;
  p.lambda_b_d = del / static_cast<double>(ops) / h_b;
  p.lambda_ib_s = search_ib / h_ib;
  p.tau_c = scanned ? scan / static_cast<double>(scanned) : p.lambda_b_s;
  (void)sink;
  return p;
}

}  // namespace pimtree::bench
