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
#include <barrier>
#include <chrono>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "pimtree/btree.hpp"
#include "pimtree/join/config.hpp"
#include "pimtree/join/oracle.hpp"

namespace pimtree {

/// Round-robin partitioned join on P worker threads. Every worker sees
/// every arrival, probes only its own local indexes, and owns the inserts
/// and deletes of tuples with seq mod P equal to its rank. A barrier per
/// batch gathers the partial results and emits them in arrival order.
class RoundRobinParallelJoin {
 public:
  RoundRobinParallelJoin(const EngineConfig& cfg, Key diff) : cfg_(cfg), pred_(diff) {
    cfg_.validate();
    p_ = cfg_.threads;
    streams_ = cfg_.join_mode == JoinMode::SelfJoin ? 1 : 2;
    batch_ = std::max<std::size_t>(1, cfg_.task_size * 8);
  }

  RunStats run(std::span<const Tuple> arrivals) {
    validate_arrivals(arrivals, cfg_.join_mode);
    arrivals_ = arrivals;
    plan(arrivals);
    cores_ = std::vector<Core>(p_);
    for (auto& c : cores_) c.partial.resize(batch_);
    sink_ = ResultSink(cfg_.collect_results);

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    batch_start_ = start;
    done_ = 0;
    measured_.reset();
    if (cfg_.measure_from == 0) measured_ = start;
    const std::size_t batches = (arrivals.size() + batch_ - 1) / batch_;
    std::barrier sync(static_cast<std::ptrdiff_t>(p_), Completion{this});
    std::vector<std::thread> pool;
    for (std::size_t p = 0; p < p_; ++p) {
      pool.emplace_back([&, p] {
        for (std::size_t b = 0; b < batches; ++b) {
          work(p, b);
          sync.arrive_and_wait();
        }
      });
    }
    for (auto& t : pool) t.join();
    const auto end = Clock::now();

    RunStats st;
    finish_timing(st, arrivals.size(), cfg_.measure_from, start, measured_, end);
    st.results = sink_.count();
    st.result_hash = sink_.hash();
    st.p50_latency_s = percentile(latencies_, 0.5);
    st.p99_latency_s = percentile(latencies_, 0.99);
    st.output = std::move(sink_.results());
    return st;
  }

 private:
  struct Core {
    MutableBTree<> index[2];
    std::vector<std::vector<Entry>> partial;
  };

  struct Completion {
    RoundRobinParallelJoin* self;
    void operator()() noexcept { self->finish_batch(); }
  };

  std::size_t slot(StreamId s) const { return streams_ == 1 ? 0 : index_of(s); }

  void plan(std::span<const Tuple> arrivals) {
    keys_[0].clear();
    keys_[1].clear();
    bounds_.clear();
    bounds_.reserve(arrivals.size());
    for (const Tuple& t : arrivals) {
      const std::size_t x = slot(t.stream);
      const std::size_t o = streams_ == 1 ? x : 1 - x;
      const Seq before = static_cast<Seq>(keys_[o].size());
      const std::size_t w = cfg_.window(static_cast<StreamId>(o));
      bounds_.push_back({std::max<Seq>(0, before - static_cast<Seq>(w)), before - 1});
      keys_[x].push_back(t.key);
    }
  }

  void work(std::size_t p, std::size_t b) {
    Core& core = cores_[p];
    const std::size_t first = b * batch_;
    const std::size_t last = std::min(first + batch_, arrivals_.size());
    for (std::size_t i = first; i < last; ++i) {
      const Tuple& t = arrivals_[i];
      const std::size_t x = slot(t.stream);
      const std::size_t o = streams_ == 1 ? x : 1 - x;
      auto& out = core.partial[i - first];
      out.clear();
      const auto [t_e, t_l] = bounds_[i];
      core.index[o].for_each_in_range(pred_.probe_range(t.key), [&](const Entry& e) {
        if (e.seq >= t_e && e.seq <= t_l) out.push_back(e);
      });
      const Seq expired = t.seq - static_cast<Seq>(cfg_.window(t.stream));
      if (expired >= 0 && owner(expired) == p) core.index[x].erase({keys_[x][expired], expired});
      if (owner(t.seq) == p) core.index[x].insert({t.key, t.seq});
    }
  }

  std::size_t owner(Seq seq) const { return static_cast<std::size_t>(seq) % p_; }

  void finish_batch() {
    const std::size_t first = done_ * batch_;
    const std::size_t last = std::min(first + batch_, arrivals_.size());
    const auto now = std::chrono::steady_clock::now();
    const std::size_t every = std::max<std::size_t>(1, cfg_.latency_sample_every);
    for (std::size_t i = first; i < last; ++i) {
      merged_.clear();
      for (auto& c : cores_) merged_.insert(merged_.end(), c.partial[i - first].begin(), c.partial[i - first].end());
      std::sort(merged_.begin(), merged_.end(), [](const Entry& a, const Entry& e) { return a.seq < e.seq; });
      const Tuple& t = arrivals_[i];
      for (const Entry& e : merged_) sink_.emit({t.stream, t.seq, e.seq, t.key, e.key});
      if (i % every == 0) latencies_.push_back(std::chrono::duration<double>(now - batch_start_).count());
    }
    ++done_;
    batch_start_ = now;
    if (!measured_ && done_ * batch_ >= cfg_.measure_from) measured_ = now;
  }

  EngineConfig cfg_;
  BandPredicate pred_;
  std::size_t p_ = 1;
  std::size_t streams_ = 2;
  std::size_t batch_ = 64;
  std::span<const Tuple> arrivals_;
  std::vector<Key> keys_[2];
  std::vector<std::pair<Seq, Seq>> bounds_;
  std::vector<Core> cores_;
  std::vector<Entry> merged_;
  ResultSink sink_;
  std::vector<double> latencies_;
  std::chrono::steady_clock::time_point batch_start_;
  std::size_t done_ = 0;
  std::optional<std::chrono::steady_clock::time_point> measured_;
};

inline RunStats run_round_robin_parallel(const EngineConfig& cfg, std::span<const Tuple> arrivals, Key diff) {
  RoundRobinParallelJoin join(cfg, diff);
  return join.run(arrivals);
}

}  // namespace pimtree
