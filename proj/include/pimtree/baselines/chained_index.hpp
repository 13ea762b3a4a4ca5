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
#include <deque>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "pimtree/btree.hpp"
#include "pimtree/core/sliding_window.hpp"
#include "pimtree/immutable_btree.hpp"
#include "pimtree/imtree.hpp"

namespace pimtree {

enum class ChainVariant { BChain, IBChain };

/// Window split into arrival-ordered subindexes. New entries go to the
/// active B+-tree; a full active subindex is archived (as a B+-tree or as an
/// immutable tree) and archived subindexes are dropped whole once every
/// entry in them has expired.
template <class BTree = MutableBTree<>>
class ChainedIndex {
 public:
  struct Archived {
    std::unique_ptr<BTree> btree;  // B-chain
    ImmutableTree ib;              // IB-chain
    Seq first_seq = 0;
    Seq last_seq = 0;
    std::size_t size = 0;
  };

  ChainedIndex(std::size_t w, std::size_t chain_length, ChainVariant variant,
               std::size_t ib_fanout = ImmutableTree::kDefaultFanOut)
      : w_(w), l_(chain_length), variant_(variant), ib_fanout_(ib_fanout) {
    if (w == 0) throw std::invalid_argument("window size must be positive");
    if (chain_length < 2) throw std::invalid_argument("chain length must be at least 2");
    capacity_ = (w + chain_length - 2) / (chain_length - 1);
  }

  std::size_t chain_length() const noexcept { return l_; }
  ChainVariant variant() const noexcept { return variant_; }
  std::size_t subindex_capacity() const noexcept { return capacity_; }
  std::size_t subindex_count() const noexcept { return archived_.size() + 1; }
  const std::deque<Archived>& archived() const noexcept { return archived_; }
  const BTree& active() const noexcept { return active_; }
  std::size_t archive_count() const noexcept { return archives_; }

  std::size_t size() const noexcept {
    std::size_t n = active_.size();
    for (const auto& a : archived_) n += a.size;
    return n;
  }

  /// Returns true when the insert archived the active subindex.
  bool insert(Entry e) {
    active_.insert(e);
    active_first_ = std::min(active_first_, e.seq);
    active_last_ = std::max(active_last_, e.seq);
    if (active_.size() < capacity_) return false;
    Archived a;
    a.first_seq = active_first_;
    a.last_seq = active_last_;
    a.size = active_.size();
    if (variant_ == ChainVariant::IBChain) {
      a.ib = ImmutableTree::build(active_.entries(), ib_fanout_);
      active_.clear();
    } else {
      a.btree = std::make_unique<BTree>(std::move(active_));
      active_ = BTree();
    }
    archived_.push_back(std::move(a));
    active_first_ = std::numeric_limits<Seq>::max();
    active_last_ = std::numeric_limits<Seq>::min();
    ++archives_;
    return true;
  }

  /// Drops archived subindexes whose entries all have seq < cut.
  std::size_t release(Seq cut) {
    std::size_t dropped = 0;
    while (!archived_.empty() && archived_.front().last_seq < cut) {
      archived_.pop_front();
      ++dropped;
    }
    return dropped;
  }

  /// Entries with seq < cut that are still held.
  std::size_t stale_count(Seq cut) const {
    std::size_t n = 0;
    auto count = [&](const Entry& e) { n += e.seq < cut; };
    active_.for_each(count);
    for (const auto& a : archived_) {
      if (a.btree) a.btree->for_each(count);
      else
        for (const auto& e : a.ib.entries()) count(e);
    }
    return n;
  }

  /// Appends entries with key in range passing `live`, grouped by subindex.
  template <class Live>
  void search_unordered(KeyRange range, Live&& live, std::vector<Entry>& out) const {
    if (range.empty()) return;
    auto keep = [&](const Entry& e) {
      if (live(e)) out.push_back(e);
    };
    for (const auto& a : archived_) {
      if (a.btree) a.btree->for_each_in_range(range, keep);
      else
        a.ib.range_scan(range, live, [&](const Entry& e) { out.push_back(e); });
    }
    active_.for_each_in_range(range, keep);
  }

  template <class Live>
  std::vector<Entry> search(KeyRange range, Live&& live) const {
    std::vector<Entry> out;
    search_unordered(range, live, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<Entry> search(KeyRange range, const SlidingWindow& window) const {
    return search(range, not_expired(window));
  }

 private:
  std::size_t w_;
  std::size_t l_;
  ChainVariant variant_;
  std::size_t ib_fanout_;
  std::size_t capacity_ = 0;
  BTree active_;
  Seq active_first_ = std::numeric_limits<Seq>::max();
  Seq active_last_ = std::numeric_limits<Seq>::min();
  std::deque<Archived> archived_;
  std::size_t archives_ = 0;
};

}  // namespace pimtree
