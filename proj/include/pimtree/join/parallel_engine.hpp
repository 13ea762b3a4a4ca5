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
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "pimtree/core/sliding_window.hpp"
#include "pimtree/join/config.hpp"
#include "pimtree/join/index_adapters.hpp"
#include "pimtree/join/lock_order.hpp"
#include "pimtree/join/oracle.hpp"
#include "pimtree/join/work_queue.hpp"

namespace pimtree {

/// Multi-threaded index-based window join. Each worker repeatedly
///   1. acquires a task of up to task_size arrivals from the shared queue,
///   2. generates their results: index lookup for tuples before the
///      opposite edge, linear window scan from the edge on,
///   3. inserts the tuples into their own index and tries to advance the
///      edge,
///   4. tries to propagate completed results in arrival order.
/// Merges of IM/PIM indexes run on the worker that saw the threshold.
class ParallelJoin {
 public:
  ParallelJoin(const EngineConfig& cfg, Key diff)
      : cfg_(cfg), pred_(diff), queue_(cfg.effective_queue_capacity()) {
    cfg_.validate();
    if (cfg_.index == IndexKind::RoundRobin) throw std::invalid_argument("round robin has its own engine");
    streams_ = cfg_.join_mode == JoinMode::SelfJoin ? 1 : 2;
    for (std::size_t s = 0; s < streams_; ++s) {
      w_[s] = cfg_.window(static_cast<StreamId>(s));
      pending_cap_[s] = cfg_.effective_pending_capacity(w_[s]);
      const std::size_t merge_slack =
          cfg_.is_merge_tree() ? static_cast<std::size_t>(cfg_.merge_ratio * static_cast<double>(w_[s])) + 1 : 0;
      const std::size_t cap = w_[s] + merge_slack + pending_cap_[s] + 2 * queue_.capacity() +
                              cfg_.threads * cfg_.task_size + 64;
      windows_[s] = std::make_unique<SlidingWindow>(w_[s], cap);
      indexes_[s] = make_concurrent_index(cfg_, w_[s]);
    }
    eager_ = indexes_[0]->eviction() == Eviction::Eager;
  }

  ConcurrentIndex& index(StreamId s) { return *indexes_[slot(s)]; }

  RunStats run(std::span<const Tuple> arrivals) {
    validate_arrivals(arrivals, cfg_.join_mode);
    arrivals_ = arrivals;
    sink_ = ResultSink(cfg_.collect_results);
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    std::vector<std::thread> pool;
    pool.reserve(cfg_.threads);
    for (std::size_t i = 0; i < cfg_.threads; ++i) pool.emplace_back([this] { worker(); });
    for (auto& t : pool) t.join();
    propagate();
    const auto end = Clock::now();
    if (queue_.size() != 0) throw std::logic_error("parallel join finished with unpropagated items");

    RunStats st;
    finish_timing(st, arrivals.size(), cfg_.measure_from, start, measured_, end);
    st.results = sink_.count();
    st.result_hash = sink_.hash();
    st.p50_latency_s = percentile(latencies_, 0.5);
    st.p99_latency_s = percentile(latencies_, 0.99);
    st.merges = merges_.load();
    st.nonblocking_fallbacks = fallbacks_.load();
    st.admission_stalls = stalls_.load();
    st.output = std::move(sink_.results());
    return st;
  }

 private:
  using Clock = std::chrono::steady_clock;
  using QueueLock = std::unique_lock<WorkQueue::Mutex>;

  std::size_t slot(StreamId s) const { return streams_ == 1 ? 0 : index_of(s); }
  std::size_t opp_slot(std::size_t own) const { return streams_ == 1 ? own : 1 - own; }

  static void raise_to(std::atomic<Seq>& a, Seq v) {
    Seq cur = a.load(std::memory_order_relaxed);
    while (cur < v && !a.compare_exchange_weak(cur, v, std::memory_order_release, std::memory_order_relaxed)) {
    }
  }

  void worker() {
    std::vector<Tuple> task;
    task.reserve(cfg_.task_size);
    for (;;) {
      const auto [first, n] = acquire();
      if (n == 0) break;
      if (cfg_.yield_after_acquire) std::this_thread::yield();
      task.clear();
      for (std::size_t i = 0; i < n; ++i) {
        WorkItem& it = queue_.at(first + i);
        generate(it);
        task.push_back(it.tuple);
      }
      // The item slots may be recycled once propagated, so step 3 works
      // from the local copies.
      for (std::size_t i = 0; i < n; ++i) WorkQueue::complete(queue_.at(first + i));
      for (const Tuple& t : task) update(t);
      {
        QueueLock lk(queue_.mutex());
        if (--active_tasks_ == 0 && blocked_) gate_cv_.notify_all();
      }
      propagate();
      maybe_merge();
    }
  }

  // Step 1. Admits the next arrivals (appending them to their windows) and
  // acquires them as one task. Returns n == 0 once the input is exhausted.
  std::pair<std::size_t, std::size_t> acquire() {
    QueueLock lk(queue_.mutex());
    for (;;) {
      if (blocked_ || overflow_block_.load(std::memory_order_acquire)) {
        gate_cv_.wait(lk);
        continue;
      }
      if (next_input_ == arrivals_.size()) return {0, 0};
      if (queue_.size() == 0) {
        // Nothing in flight: every future probe starts at or after this cut.
        for (std::size_t s = 0; s < streams_; ++s)
          raise_to(safe_cut_[s], std::max<Seq>(0, admitted_[s] - static_cast<Seq>(w_[s])));
      }
      const std::size_t want =
          std::min({cfg_.task_size, arrivals_.size() - next_input_, queue_.free_slots()});
      for (std::size_t k = 0; k < want; ++k) {
        const Tuple& t = arrivals_[next_input_];
        const std::size_t x = slot(t.stream);
        SlidingWindow& win = *windows_[x];
        if (win.full()) {
          win.reclaim_until(std::min(safe_cut_[x].load(std::memory_order_acquire),
                                     edge_[x].load(std::memory_order_acquire)));
          if (win.full()) break;
        }
        queue_.push_locked(t, {admitted_[0], admitted_[1]});
        WorkItem& it = queue_.at(queue_.tail() - 1);
        if (next_input_ == cfg_.measure_from) measured_ = Clock::now();
        if (next_input_ % sample_every() == 0) {
          it.sampled = true;
          it.enqueued = Clock::now();
        }
        win.append(t, Eviction::FlagOnly);
        ++admitted_[x];
        ++next_input_;
      }
      const auto task = queue_.acquire_locked(cfg_.task_size, [&](WorkItem& it) {
        const std::size_t o = opp_slot(slot(it.tuple.stream));
        const Seq before = it.before[o];
        it.t_l = before - 1;
        it.t_e = std::max<Seq>(0, before - static_cast<Seq>(w_[o]));
      });
      if (task.second == 0) {
        stalls_.fetch_add(1, std::memory_order_relaxed);
        lk.unlock();
        propagate();
        std::this_thread::yield();
        lk.lock();
        continue;
      }
      ++active_tasks_;
      return task;
    }
  }

  std::size_t sample_every() const { return std::max<std::size_t>(1, cfg_.latency_sample_every); }

  // Step 2.
  void generate(WorkItem& it) {
    const std::size_t o = opp_slot(slot(it.tuple.stream));
    it.matches.clear();
    if (it.t_l < it.t_e) return;
    const Seq edge = edge_[o].load(std::memory_order_acquire);
    const KeyRange range = pred_.probe_range(it.tuple.key);
    const Seq idx_hi = std::min(edge - 1, it.t_l);
    if (idx_hi >= it.t_e) indexes_[o]->probe(range, it.t_e, idx_hi, it.matches);
    windows_[o]->scan(range, std::max(edge, it.t_e), it.t_l,
                      [&](Seq s, Key k) { it.matches.push_back({k, s}); });
    std::sort(it.matches.begin(), it.matches.end(),
              [](const Entry& a, const Entry& b) { return a.seq < b.seq; });
  }

  // Step 3.
  void update(const Tuple& t) {
    const std::size_t x = slot(t.stream);
    const Entry e{t.key, t.seq};
    if (suspended_[x].load(std::memory_order_acquire)) {
      std::lock_guard g(pending_mu_[x]);
      pending_[x].push_back(e);
      if (pending_[x].size() > pending_cap_[x] && !overflow_block_.exchange(true)) {
        fallbacks_.fetch_add(1, std::memory_order_relaxed);
      }
      return;
    }
    const bool due = indexes_[x]->insert(e);
    windows_[x]->mark_indexed(t.seq);
    if (cfg_.is_chained()) indexes_[x]->release(safe_cut_[x].load(std::memory_order_acquire));
    if (due) merge_req_[x].store(true, std::memory_order_release);
    advance_edge(x);
  }

  void advance_edge(std::size_t x) {
    if (edge_lock_[x].test_and_set(std::memory_order_acquire)) return;
    note_acquire(LockRank::Edge);
    const SlidingWindow& win = *windows_[x];
    Seq e = edge_[x].load(std::memory_order_relaxed);
    const Seq head = win.head_seq();
    if (cfg_.mutation == Mutation::EdgeIgnoresIndexedFlag) {
      e = head;
    } else {
      while (e < head && win.indexed(e)) ++e;
    }
    edge_[x].store(e, std::memory_order_release);
    note_release(LockRank::Edge);
    edge_lock_[x].clear(std::memory_order_release);
  }

  // Step 4.
  void propagate() {
    for (;;) {
      if (prop_lock_.test_and_set(std::memory_order_acquire)) return;
      note_acquire(LockRank::Propagation);
      eager_batch_.clear();
      while (WorkItem* it = queue_.completed_head()) {
        const Tuple& t = it->tuple;
        for (const Entry& m : it->matches) sink_.emit({t.stream, t.seq, m.seq, t.key, m.key});
        if (it->sampled) latencies_.push_back(std::chrono::duration<double>(Clock::now() - it->enqueued).count());
        if (eager_) {
          // This arrival expires tuple seq - w of its own stream; every
          // probe that could still see it has been propagated.
          const std::size_t x = slot(t.stream);
          const Seq s = t.seq - static_cast<Seq>(w_[x]);
          if (s >= 0) {
            const Entry d{windows_[x]->key(s), s};
            if (windows_[x]->indexed(s)) eager_batch_.emplace_back(x, d);
            else deferred_.emplace_back(x, d);
          }
        }
        queue_.pop();
      }
      if (!deferred_.empty()) {
        auto keep = std::partition(deferred_.begin(), deferred_.end(),
                                   [&](const auto& p) { return !windows_[p.first]->indexed(p.second.seq); });
        eager_batch_.insert(eager_batch_.end(), keep, deferred_.end());
        deferred_.erase(keep, deferred_.end());
      }
      const std::size_t h = queue_.head();
      if (h < queue_.tail()) {
        const WorkItem& head = queue_.at(h);
        for (std::size_t s = 0; s < streams_; ++s)
          raise_to(safe_cut_[s], std::max<Seq>(0, head.before[s] - static_cast<Seq>(w_[s])));
      }
      auto batch = std::move(eager_batch_);
      eager_batch_ = {};
      note_release(LockRank::Propagation);
      prop_lock_.clear(std::memory_order_release);
      // Deletes take index locks, which rank below the propagation lock.
      for (const auto& [x, d] : batch) indexes_[x]->erase(d);
      if (!queue_.completed_head()) return;
    }
  }

  void maybe_merge() {
    for (std::size_t x = 0; x < streams_; ++x) {
      if (!merge_req_[x].load(std::memory_order_acquire)) continue;
      if (merger_busy_.exchange(true, std::memory_order_acq_rel)) return;
      if (merge_req_[x].exchange(false)) {
        if (cfg_.merge_mode == MergeMode::Blocking) blocking_merge(x);
        else nonblocking_merge(x);
        merges_.fetch_add(1, std::memory_order_relaxed);
      }
      merger_busy_.store(false, std::memory_order_release);
    }
  }

  // Blocks task assignment and waits until no task is active.
  Seq drain(QueueLock& lk, std::size_t x) {
    blocked_ = true;
    gate_cv_.wait(lk, [&] { return active_tasks_ == 0; });
    if (queue_.size() == 0) raise_to(safe_cut_[x], std::max<Seq>(0, admitted_[x] - static_cast<Seq>(w_[x])));
    return safe_cut_[x].load(std::memory_order_acquire);
  }

  void unblock(QueueLock& lk) {
    blocked_ = false;
    lk.unlock();
    gate_cv_.notify_all();
  }

  void blocking_merge(std::size_t x) {
    QueueLock lk(queue_.mutex());
    const Seq cut = drain(lk, x);
    lk.unlock();
    indexes_[x]->merge(cut);
    lk.lock();
    unblock(lk);
  }

  // Phase 1 builds the new tree while other workers keep joining with index
  // updates parked; phase 2 swaps the tree in and replays parked updates.
  void nonblocking_merge(std::size_t x) {
    QueueLock lk(queue_.mutex());
    const Seq cut = drain(lk, x);
    suspended_[x].store(true, std::memory_order_release);
    unblock(lk);

    ImmutableTree fresh = indexes_[x]->build_merged(cut);

    std::vector<Entry> parked;
    lk.lock();
    drain(lk, x);
    indexes_[x]->install(std::move(fresh));
    suspended_[x].store(false, std::memory_order_release);
    {
      std::lock_guard g(pending_mu_[x]);
      parked.swap(pending_[x]);
    }
    overflow_block_.store(false, std::memory_order_release);
    unblock(lk);

    for (const Entry& e : parked) {
      if (indexes_[x]->insert(e)) merge_req_[x].store(true, std::memory_order_release);
      windows_[x]->mark_indexed(e.seq);
    }
    advance_edge(x);
  }

  EngineConfig cfg_;
  BandPredicate pred_;
  std::size_t streams_ = 2;
  std::size_t w_[2] = {0, 0};
  std::size_t pending_cap_[2] = {0, 0};
  std::unique_ptr<SlidingWindow> windows_[2];
  std::unique_ptr<ConcurrentIndex> indexes_[2];
  bool eager_ = false;

  WorkQueue queue_;
  std::span<const Tuple> arrivals_;
  // Guarded by the queue lock.
  std::size_t next_input_ = 0;
  Seq admitted_[2] = {0, 0};
  bool blocked_ = false;
  std::size_t active_tasks_ = 0;
  std::optional<Clock::time_point> measured_;
  std::condition_variable_any gate_cv_;
  std::atomic<bool> overflow_block_{false};

  std::atomic<Seq> edge_[2] = {0, 0};
  std::atomic_flag edge_lock_[2] = {ATOMIC_FLAG_INIT, ATOMIC_FLAG_INIT};
  std::atomic<Seq> safe_cut_[2] = {0, 0};

  std::atomic<bool> suspended_[2] = {false, false};
  std::mutex pending_mu_[2];
  std::vector<Entry> pending_[2];

  std::atomic<bool> merge_req_[2] = {false, false};
  std::atomic<bool> merger_busy_{false};

  // Guarded by the propagation flag.
  std::atomic_flag prop_lock_ = ATOMIC_FLAG_INIT;
  ResultSink sink_;
  std::vector<double> latencies_;
  std::vector<std::pair<std::size_t, Entry>> deferred_;
  std::vector<std::pair<std::size_t, Entry>> eager_batch_;

  std::atomic<std::size_t> merges_{0};
  std::atomic<std::size_t> fallbacks_{0};
  std::atomic<std::size_t> stalls_{0};
};

inline RunStats run_parallel(const EngineConfig& cfg, std::span<const Tuple> arrivals, Key diff) {
  ParallelJoin join(cfg, diff);
  return join.run(arrivals);
}

}  // namespace pimtree
