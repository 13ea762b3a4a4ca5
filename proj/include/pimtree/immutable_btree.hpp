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
#include <span>
#include <stdexcept>
#include <vector>

#include "pimtree/core/types.hpp"

namespace pimtree {

/// Read-only B+-tree laid out breadth first in flat arrays. Child j of node
/// i at depth d is node i * fanout + j at depth d + 1, so no child pointers
/// are stored. Inner key j of a node is the largest key below child j.
class ImmutableTree {
 public:
  static constexpr std::size_t kDefaultFanOut = 32;
  static constexpr std::size_t kDefaultLeafCapacity = 32;

  ImmutableTree() = default;
  ImmutableTree(std::size_t fanout, std::size_t leaf_capacity) : f_(fanout), leaf_cap_(leaf_capacity) {
    if (f_ < 2) throw std::invalid_argument("immutable tree fan-out must be at least 2");
    if (leaf_cap_ < 1) throw std::invalid_argument("immutable tree leaf capacity must be positive");
    level_counts_ = {1};
  }

  /// Builds from entries sorted by (key, seq). Touches every entry once plus
  /// one key slot per inner-node child.
  static ImmutableTree build(std::vector<Entry> sorted, std::size_t fanout = kDefaultFanOut,
                             std::size_t leaf_capacity = kDefaultLeafCapacity) {
#ifndef NDEBUG
    if (!std::is_sorted(sorted.begin(), sorted.end()))
      throw std::invalid_argument("ib_build input is not sorted");
#endif
    ImmutableTree t(fanout, leaf_capacity);
    t.entries_ = std::move(sorted);
    t.layout();
    return t;
  }

  std::size_t fanout() const noexcept { return f_; }
  std::size_t leaf_capacity() const noexcept { return leaf_cap_; }
  /// Number of inner levels. Zero when all entries fit in one leaf.
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t leaf_count() const noexcept { return leaf_count_; }

  /// Nodes at depth d; depth() addresses the leaf level.
  std::size_t node_count(std::size_t d) const { return level_counts_.at(d); }
  std::size_t level_offset(std::size_t d) const { return offsets_.at(d); }

  std::span<const Entry> entries() const noexcept { return entries_; }
  std::span<const Key> inner_keys() const noexcept { return keys_; }

  /// Key slots of inner node i at depth d < depth(), f - 1 of them.
  std::span<const Key> node_keys(std::size_t d, std::size_t i) const {
    const std::size_t g = offsets_.at(d) + i;
    return {keys_.data() + g * (f_ - 1), f_ - 1};
  }

  /// Breadth-first rank, at max_depth, of the node whose subtree holds the
  /// first entry with key >= `key` (the last node if there is none).
  std::size_t descend(Key key, std::size_t max_depth) const {
    if (max_depth > depth_) throw std::out_of_range("descend below the leaf level");
    std::size_t node = 0;
    for (std::size_t d = 0; d < max_depth; ++d) {
      const Key* k = keys_.data() + (offsets_[d] + node) * (f_ - 1);
      std::size_t j = 0;
      while (j < f_ - 1 && k[j] < key) ++j;
      const std::size_t children = std::min(f_, level_counts_[d + 1] - node * f_);
      node = node * f_ + std::min(j, children - 1);
    }
    return node;
  }

  /// Index into entries() of the first entry with key >= `key`, or size().
  std::size_t lower_bound(Key key) const {
    if (entries_.empty()) return 0;
    const std::size_t leaf = descend(key, depth_);
    const std::size_t begin = leaf * leaf_cap_;
    const std::size_t end = std::min(begin + leaf_cap_, entries_.size());
    auto it = std::lower_bound(entries_.begin() + begin, entries_.begin() + end, key,
                               [](const Entry& e, Key k) { return e.key < k; });
    return static_cast<std::size_t>(it - entries_.begin());
  }

  /// Calls fn(entry) for every entry with key in range for which live(entry)
  /// holds, ascending.
  template <class Live, class Fn>
  void range_scan(KeyRange range, Live&& live, Fn&& fn) const {
    if (range.empty()) return;
    for (std::size_t i = lower_bound(range.lo); i < entries_.size(); ++i) {
      const Entry& e = entries_[i];
      if (e.key > range.hi) break;
      if (live(e)) fn(e);
    }
  }

  template <class Live>
  std::vector<Entry> range_scan(KeyRange range, Live&& live) const {
    std::vector<Entry> out;
    range_scan(range, live, [&](const Entry& e) { out.push_back(e); });
    return out;
  }

  /// Largest key below node i at depth d.
  Key node_max(std::size_t d, std::size_t i) const {
    std::size_t span_leaves = 1;
    for (std::size_t k = d; k < depth_; ++k) span_leaves *= f_;
    const std::size_t last = std::min((i + 1) * span_leaves * leaf_cap_, entries_.size());
    if (last == 0) return kMaxKey;
    return entries_[last - 1].key;
  }

  /// Upper bounds of the nodes at depth d, ascending. The last one is
  /// excluded because the last node is unbounded above.
  std::vector<Key> separators(std::size_t d) const {
    std::vector<Key> seps;
    const std::size_t n = node_count(d);
    for (std::size_t i = 0; i + 1 < n; ++i) seps.push_back(node_max(d, i));
    return seps;
  }

 private:
  void layout() {
    const std::size_t n = entries_.size();
    leaf_count_ = n == 0 ? 0 : (n + leaf_cap_ - 1) / leaf_cap_;
    depth_ = 0;
    std::vector<std::size_t> counts{std::max<std::size_t>(leaf_count_, 1)};
    while (counts.back() > 1) counts.push_back((counts.back() + f_ - 1) / f_);
    depth_ = counts.size() - 1;
    level_counts_.assign(counts.rbegin(), counts.rend());

    offsets_.assign(depth_ + 1, 0);
    std::size_t inner_nodes = 0;
    for (std::size_t d = 0; d < depth_; ++d) {
      offsets_[d] = inner_nodes;
      inner_nodes += level_counts_[d];
    }
    offsets_[depth_] = inner_nodes;
    keys_.assign(inner_nodes * (f_ - 1), kMaxKey);

    // Level by level, bottom up: child maxima come from the level below.
    std::vector<Key> child_max(leaf_count_);
    for (std::size_t l = 0; l < leaf_count_; ++l)
      child_max[l] = entries_[std::min((l + 1) * leaf_cap_, n) - 1].key;
    for (std::size_t d = depth_; d-- > 0;) {
      std::vector<Key> node_max(level_counts_[d]);
      for (std::size_t i = 0; i < level_counts_[d]; ++i) {
        Key* k = keys_.data() + (offsets_[d] + i) * (f_ - 1);
        const std::size_t first = i * f_;
        const std::size_t last = std::min(first + f_, child_max.size());
        for (std::size_t c = first; c + 1 < last; ++c) k[c - first] = child_max[c];
        node_max[i] = child_max[last - 1];
      }
      child_max = std::move(node_max);
    }
  }

  std::size_t f_ = kDefaultFanOut;
  std::size_t leaf_cap_ = kDefaultLeafCapacity;
  std::size_t depth_ = 0;
  std::size_t leaf_count_ = 0;
  std::vector<std::size_t> level_counts_{1};
  std::vector<std::size_t> offsets_{0};
  std::vector<Key> keys_;
  std::vector<Entry> entries_;
};

inline ImmutableTree ib_build(std::vector<Entry> sorted, std::size_t fanout = ImmutableTree::kDefaultFanOut,
                              std::size_t leaf_capacity = ImmutableTree::kDefaultLeafCapacity) {
  return ImmutableTree::build(std::move(sorted), fanout, leaf_capacity);
}

}  // namespace pimtree
