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
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pimtree/core/sliding_window.hpp"
#include "pimtree/join/config.hpp"
#include "pimtree/join/index_adapters.hpp"
#include "pimtree/join/oracle.hpp"

namespace pimtree {

/// Index-based window join, one tuple at a time: probe the opposite index,
/// evict the expired tuple, insert the new one.
template <class Adapter>
class SingleThreadedJoin {
 public:
  SingleThreadedJoin(const EngineConfig& cfg, Key diff) : cfg_(cfg), pred_(diff) {
    cfg_.validate();
    const std::size_t streams = cfg.join_mode == JoinMode::SelfJoin ? 1 : 2;
    for (std::size_t s = 0; s < streams; ++s) {
      const std::size_t w = cfg.window(static_cast<StreamId>(s));
      windows_[s] = std::make_unique<SlidingWindow>(w, w + 64);
      indexes_[s] = std::make_unique<Adapter>(cfg, w);
    }
  }

  Adapter& index(StreamId s) { return *indexes_[slot(s)]; }
  const SlidingWindow& window(StreamId s) const { return *windows_[slot(s)]; }
  std::size_t merges() const noexcept { return merges_; }

  void process(const Tuple& t, ResultSink& sink) {
    const std::size_t own = slot(t.stream);
    const std::size_t opp = cfg_.join_mode == JoinMode::SelfJoin ? own : 1 - own;
    SlidingWindow& ow = *windows_[opp];
    const Seq t_l = ow.head_seq() - 1;
    const Seq t_e = ow.live_begin();
    if (t_l >= t_e) {
      scratch_.clear();
      indexes_[opp]->probe(pred_.probe_range(t.key), t_e, t_l, scratch_);
      std::sort(scratch_.begin(), scratch_.end(), [](const Entry& a, const Entry& b) { return a.seq < b.seq; });
      for (const Entry& e : scratch_) sink.emit({t.stream, t.seq, e.seq, t.key, e.key});
    }

    SlidingWindow& w = *windows_[own];
    Adapter& idx = *indexes_[own];
    if (auto ev = w.append(t, Adapter::kEviction)) idx.erase({ev->key, ev->seq});
    const Seq cut = w.live_begin();
    w.reclaim_until(cut);
    const bool due = idx.insert({t.key, t.seq});
    w.mark_indexed(t.seq);
    if constexpr (Adapter::kReleases) idx.release(cut);
    if constexpr (Adapter::kMergeable) {
      if (due) {
        idx.merge(cut);
        ++merges_;
      }
    }
  }

  RunStats run(std::span<const Tuple> arrivals) {
    validate_arrivals(arrivals, cfg_.join_mode);
    ResultSink sink(cfg_.collect_results);
    std::vector<double> lat;
    const std::size_t every = std::max<std::size_t>(1, cfg_.latency_sample_every);
    lat.reserve(arrivals.size() / every + 1);
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    std::optional<Clock::time_point> measured;
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
      if (i == cfg_.measure_from) measured = Clock::now();
      if (i % every == 0) {
        const auto t0 = Clock::now();
        process(arrivals[i], sink);
        lat.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      } else {
        process(arrivals[i], sink);
      }
    }
    RunStats st;
    finish_timing(st, arrivals.size(), cfg_.measure_from, start, measured, Clock::now());
    st.results = sink.count();
    st.result_hash = sink.hash();
    st.p50_latency_s = percentile(lat, 0.5);
    st.p99_latency_s = percentile(lat, 0.99);
    st.merges = merges_;
    st.output = std::move(sink.results());
    return st;
  }

 private:
  std::size_t slot(StreamId s) const { return cfg_.join_mode == JoinMode::SelfJoin ? 0 : index_of(s); }

  EngineConfig cfg_;
  BandPredicate pred_;
  std::unique_ptr<SlidingWindow> windows_[2];
  std::unique_ptr<Adapter> indexes_[2];
  std::vector<Entry> scratch_;
  std::size_t merges_ = 0;
};

inline RunStats run_single_threaded(const EngineConfig& cfg, std::span<const Tuple> arrivals, Key diff) {
  return with_single_threaded_adapter(cfg, [&]<class Adapter>() {
    SingleThreadedJoin<Adapter> join(cfg, diff);
    return join.run(arrivals);
  });
}

}  // namespace pimtree
