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
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pimtree/btree.hpp"
#include "pimtree/core/sliding_window.hpp"
#include "pimtree/immutable_btree.hpp"

namespace pimtree {

inline std::size_t merge_threshold(double m, std::size_t w) {
  if (!(m > 0.0 && m <= 1.0)) throw std::invalid_argument("merge ratio must lie in (0, 1]");
  if (w == 0) throw std::invalid_argument("window size must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(m * static_cast<double>(w) - 1e-9)));
}

/// Liveness filter over index entries.
template <class F>
concept LivePredicate = std::predicate<const F&, const Entry&>;

/// Predicate accepting entries whose window slot is not flagged expired.
inline auto not_expired(const SlidingWindow& window) {
  return [&window](const Entry& e) { return !window.expired(e.seq); };
}

/// Predicate accepting entries with seq >= floor.
inline auto seq_at_least(Seq floor) {
  return [floor](const Entry& e) { return e.seq >= floor; };
}

/// Two-way merge of the live part of a sorted span with a sorted chain.
template <class Live, class ForEachChain>
std::vector<Entry> merge_live(std::span<const Entry> sorted, std::size_t chain_size, Live&& live,
                              ForEachChain&& for_each_chain) {
  std::vector<Entry> out;
  out.reserve(sorted.size() + chain_size);
  std::size_t i = 0;
  for_each_chain([&](const Entry& e) {
    while (i < sorted.size() && sorted[i] < e) {
      if (live(sorted[i])) out.push_back(sorted[i]);
      ++i;
    }
    out.push_back(e);
  });
  for (; i < sorted.size(); ++i)
    if (live(sorted[i])) out.push_back(sorted[i]);
  return out;
}

/// Two-stage index: new entries go to a mutable B+-tree T_I, and every
/// ceil(m * w) inserts T_I is merged with the live part of the immutable T_S.
template <class BTree = MutableBTree<>>
class ImTree {
 public:
  ImTree(std::size_t w, double m, std::size_t fanout = ImmutableTree::kDefaultFanOut,
         std::size_t leaf_capacity = ImmutableTree::kDefaultLeafCapacity)
      : w_(w), m_(m), threshold_(merge_threshold(m, w)), t_s_(fanout, leaf_capacity) {}

  std::size_t window_size() const noexcept { return w_; }
  double merge_ratio() const noexcept { return m_; }
  std::size_t threshold() const noexcept { return threshold_; }
  std::size_t inserted_since_merge() const noexcept { return inserted_; }
  bool merge_due() const noexcept { return inserted_ >= threshold_; }

  const BTree& t_i() const noexcept { return t_i_; }
  const ImmutableTree& t_s() const noexcept { return t_s_; }
  std::size_t size() const noexcept { return t_i_.size() + t_s_.size(); }

  /// Returns true when this insert reaches the merge threshold.
  bool insert(Entry e) {
    t_i_.insert(e);
    return ++inserted_ == threshold_;
  }

  /// Entries with key in range that pass `live`, ascending by (key, seq).
  template <LivePredicate Live>
  void search(KeyRange range, Live&& live, std::vector<Entry>& out) const {
    if (range.empty()) return;
    const std::size_t base = out.size();
    t_s_.range_scan(range, live, [&](const Entry& e) { out.push_back(e); });
    const std::size_t mid = out.size();
    t_i_.for_each_in_range(range, [&](const Entry& e) {
      if (live(e)) out.push_back(e);
    });
    std::inplace_merge(out.begin() + base, out.begin() + mid, out.end());
  }

  template <LivePredicate Live>
  std::vector<Entry> search(KeyRange range, Live&& live) const {
    std::vector<Entry> out;
    search(range, live, out);
    return out;
  }

  std::vector<Entry> search(KeyRange range, const SlidingWindow& window) const {
    return search(range, not_expired(window));
  }

  /// Replacement T_S: live T_S entries merged with all of T_I. Does not
  /// modify this index.
  template <LivePredicate Live>
  ImmutableTree merged(Live&& live) const {
    return ImmutableTree::build(
        merge_live(t_s_.entries(), t_i_.size(), live, [&](auto&& fn) { t_i_.for_each(fn); }),
        t_s_.fanout(), t_s_.leaf_capacity());
  }

  /// Swaps in a tree produced by merged() and empties T_I.
  void install(ImmutableTree t_s) {
    t_s_ = std::move(t_s);
    t_i_.clear();
    inserted_ = 0;
  }

  template <LivePredicate Live>
  void merge(Live&& live) {
    install(merged(live));
  }

  void merge(const SlidingWindow& window) { merge(not_expired(window)); }

 private:
  std::size_t w_;
  double m_;
  std::size_t threshold_;
  std::size_t inserted_ = 0;
  BTree t_i_;
  ImmutableTree t_s_;
};

}  // namespace pimtree
