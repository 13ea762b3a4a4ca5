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
#include <stdexcept>
#include <vector>

#include "pimtree/btree.hpp"
#include "pimtree/core/sliding_window.hpp"
#include "pimtree/imtree.hpp"

namespace pimtree {

/// One stream's index split over P per-core B+-trees. Tuple seq s is owned
/// by core s mod P.
template <class BTree = MutableBTree<>>
class RoundRobinIndex {
 public:
  explicit RoundRobinIndex(std::size_t partitions) : cores_(partitions) {
    if (partitions == 0) throw std::invalid_argument("round robin needs at least one partition");
  }

  std::size_t partitions() const noexcept { return cores_.size(); }
  std::size_t owner(Seq seq) const noexcept { return static_cast<std::size_t>(seq) % cores_.size(); }
  const BTree& core(std::size_t p) const { return cores_.at(p); }
  BTree& core(std::size_t p) { return cores_.at(p); }
  /// Core that receives the next insert of this stream.
  std::size_t cursor() const noexcept { return cursor_; }

  void insert(Entry e) {
    cores_[owner(e.seq)].insert(e);
    cursor_ = owner(e.seq + 1);
  }
  bool erase(Entry e) { return cores_[owner(e.seq)].erase(e); }

  /// Searches every core's local index.
  template <class Live>
  void search_unordered(KeyRange range, Live&& live, std::vector<Entry>& out) const {
    for (const auto& c : cores_)
      c.for_each_in_range(range, [&](const Entry& e) {
        if (live(e)) out.push_back(e);
      });
  }

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& c : cores_) n += c.size();
    return n;
  }

 private:
  std::vector<BTree> cores_;
  std::size_t cursor_ = 0;
};

/// Round-robin partitioned join state for a stream pair, processed one tuple
/// at a time.
template <class BTree = MutableBTree<>>
class RoundRobinJoin {
 public:
  explicit RoundRobinJoin(std::size_t partitions) : idx_{RoundRobinIndex<BTree>(partitions), RoundRobinIndex<BTree>(partitions)} {}

  const RoundRobinIndex<BTree>& index(StreamId s) const { return idx_[index_of(s)]; }
  std::size_t partitions() const noexcept { return idx_[0].partitions(); }

  /// Probes every core's opposite index, evicts the expired tuple from its
  /// owner core and inserts `t` into its owner core. Results are appended
  /// in matched-seq order.
  void process(const Tuple& t, const BandPredicate& pred, SlidingWindow& own, const SlidingWindow& opposite,
               std::vector<JoinResult>& out) {
    const Seq t_l = opposite.head_seq() - 1;
    const Seq t_e = opposite.live_begin();
    scratch_.clear();
    idx_[index_of(opposite_stream(t))].search_unordered(pred.probe_range(t.key), seq_at_least(t_e), scratch_);
    emit(t, t_l, out);
    if (auto ev = own.append(t, Eviction::Eager)) idx_[index_of(t.stream)].erase({ev->key, ev->seq});
    own.reclaim_until(own.live_begin());
    idx_[index_of(t.stream)].insert({t.key, t.seq});
    own.mark_indexed(t.seq);
  }

 private:
  static StreamId opposite_stream(const Tuple& t) { return opposite(t.stream); }

  void emit(const Tuple& t, Seq t_l, std::vector<JoinResult>& out) {
    std::sort(scratch_.begin(), scratch_.end(), [](const Entry& a, const Entry& b) { return a.seq < b.seq; });
    for (const Entry& e : scratch_)
      if (e.seq <= t_l) out.push_back({t.stream, t.seq, e.seq, t.key, e.key});
  }

  RoundRobinIndex<BTree> idx_[2];
  std::vector<Entry> scratch_;
};

}  // namespace pimtree
