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
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "pimtree/btree.hpp"
#include "pimtree/core/sliding_window.hpp"
#include "pimtree/imtree.hpp"
#include "pimtree/immutable_btree.hpp"

namespace pimtree {

/// Lock with no effect, for builds without concurrency control.
struct NullMutex {
  void lock() noexcept {}
  void unlock() noexcept {}
  bool try_lock() noexcept { return true; }
};

/// Hooks called around subindex lock operations.
struct NullLockObserver {
  void on_acquire(std::size_t) noexcept {}
  void on_release(std::size_t) noexcept {}
  void on_ts_done() noexcept {}
};

/// Two-stage index whose mutable part is range partitioned into subindexes
/// B_0..B_n, one per node of T_S at the insertion depth. Each subindex has
/// its own lock; T_S is read without locks.
///
/// Subindex i owns keys in (sep_{i-1}, sep_i]; the last one is unbounded
/// above. The tail leaf of B_i links to the head leaf of B_{i+1}.
template <class Lock = std::mutex, class Observer = NullLockObserver, class BTree = MutableBTree<>>
class PimTree {
 public:
  struct Subindex {
    Lock lock;
    BTree tree;
    std::optional<Key> lo_excl;  // empty for B_0
    std::optional<Key> hi_incl;  // empty for the last subindex
    std::size_t ordinal = 0;
    std::atomic<std::size_t> inserts{0};

    bool overlaps(KeyRange r) const noexcept {
      if (lo_excl && r.hi <= *lo_excl) return false;
      if (hi_incl && r.lo > *hi_incl) return false;
      return true;
    }
    bool contains(Key k) const noexcept {
      return (!lo_excl || k > *lo_excl) && (!hi_incl || k <= *hi_incl);
    }
  };

  PimTree(std::size_t w, double m, std::size_t insertion_depth, std::size_t fanout = ImmutableTree::kDefaultFanOut,
          std::size_t leaf_capacity = ImmutableTree::kDefaultLeafCapacity, Observer observer = {})
      : w_(w),
        m_(m),
        threshold_(merge_threshold(m, w)),
        d_i_(insertion_depth),
        observer_(std::move(observer)),
        t_s_(fanout, leaf_capacity) {
    partition();
  }

  PimTree(const PimTree&) = delete;
  PimTree& operator=(const PimTree&) = delete;

  std::size_t window_size() const noexcept { return w_; }
  double merge_ratio() const noexcept { return m_; }
  std::size_t threshold() const noexcept { return threshold_; }
  std::size_t requested_insertion_depth() const noexcept { return d_i_; }
  /// Depth actually used after clamping to the current T_S.
  std::size_t insertion_depth() const noexcept { return d_eff_; }
  std::size_t subindex_count() const noexcept { return subs_.size(); }
  const Subindex& subindex(std::size_t i) const { return *subs_.at(i); }
  const ImmutableTree& t_s() const noexcept { return t_s_; }
  Observer& observer() noexcept { return observer_; }

  std::size_t inserted_since_merge() const noexcept { return total_.load(std::memory_order_relaxed); }
  bool merge_due() const noexcept { return inserted_since_merge() >= threshold_; }

  std::size_t t_i_size() const {
    std::size_t n = 0;
    for (const auto& s : subs_) n += s->tree.size();
    return n;
  }
  std::size_t size() const { return t_s_.size() + t_i_size(); }

  /// Inserts received by each subindex since the last merge.
  std::vector<std::size_t> insert_histogram() const {
    std::vector<std::size_t> h;
    h.reserve(subs_.size());
    for (const auto& s : subs_) h.push_back(s->inserts.load(std::memory_order_relaxed));
    return h;
  }

  std::size_t route(Key key) const { return subs_.size() == 1 ? 0 : t_s_.descend(key, d_eff_); }

  /// Thread safe. Returns true for exactly one insert per merge epoch, the
  /// one that reaches the threshold.
  bool insert(Entry e) {
    const std::size_t i = route(e.key);
    Subindex& s = *subs_[i];
    s.lock.lock();
    observer_.on_acquire(i);
    s.tree.insert(e);
    observer_.on_release(i);
    s.lock.unlock();
    s.inserts.fetch_add(1, std::memory_order_relaxed);
    return total_.fetch_add(1, std::memory_order_acq_rel) + 1 == threshold_;
  }

  /// Thread safe. Appends entries with key in range passing `live`: first
  /// the T_S matches, then the T_I matches, each ascending.
  template <LivePredicate Live>
  void search_unordered(KeyRange range, Live&& live, std::vector<Entry>& out) {
    if (range.empty()) return;
    t_s_.range_scan(range, live, [&](const Entry& e) { out.push_back(e); });
    observer_.on_ts_done();

    std::size_t i = route(range.lo);
    Subindex* s = subs_[i].get();
    s->lock.lock();
    observer_.on_acquire(i);
    auto [leaf, pos] = s->tree.lower_bound(range.lo);
    for (;;) {
      bool past = false;
      for (; pos < leaf->count; ++pos) {
        const Entry& e = leaf->entries[pos];
        if (e.key > range.hi) {
          past = true;
          break;
        }
        if (live(e)) out.push_back(e);
      }
      if (past) break;
      if (!leaf->tail) {
        leaf = leaf->next;
        pos = 0;
        continue;
      }
      // End of B_i: hand off to B_{i+1} when its range still overlaps.
      if (i + 1 == subs_.size() || !subs_[i + 1]->overlaps(range)) break;
      Subindex* succ = subs_[i + 1].get();
      succ->lock.lock();
      observer_.on_acquire(i + 1);
      leaf = leaf->next;
      pos = 0;
      observer_.on_release(i);
      s->lock.unlock();
      s = succ;
      ++i;
    }
    observer_.on_release(i);
    s->lock.unlock();
  }

  /// As search_unordered, with the output ascending by (key, seq).
  template <LivePredicate Live>
  void search(KeyRange range, Live&& live, std::vector<Entry>& out) {
    const std::size_t base = out.size();
    search_unordered(range, live, out);
    auto first_ti = std::is_sorted_until(out.begin() + base, out.end());
    std::inplace_merge(out.begin() + base, first_ti, out.end());
  }

  template <LivePredicate Live>
  std::vector<Entry> search(KeyRange range, Live&& live) {
    std::vector<Entry> out;
    search(range, live, out);
    return out;
  }

  std::vector<Entry> search(KeyRange range, const SlidingWindow& window) {
    return search(range, not_expired(window));
  }

  /// Calls fn(entry) for all of T_I in global chain order. Requires no
  /// concurrent inserts.
  template <class Fn>
  void for_each_t_i(Fn&& fn) const {
    auto* leaf = subs_.front()->tree.head_leaf();
    const auto* last_tail = subs_.back()->tree.tail_leaf();
    for (;;) {
      for (std::size_t k = 0; k < leaf->count; ++k) fn(leaf->entries[k]);
      if (leaf == last_tail) return;
      leaf = leaf->next;
    }
  }

  /// Replacement T_S from live T_S entries and all of T_I. Requires no
  /// concurrent inserts; concurrent searches are fine.
  template <LivePredicate Live>
  ImmutableTree merged(Live&& live) const {
    return ImmutableTree::build(
        merge_live(t_s_.entries(), t_i_size(), live, [&](auto&& fn) { for_each_t_i(fn); }), t_s_.fanout(),
        t_s_.leaf_capacity());
  }

  /// Installs a tree produced by merged() and repartitions T_I into empty
  /// subindexes. Requires quiescence.
  void install(ImmutableTree t_s) {
    t_s_ = std::move(t_s);
    partition();
  }

  template <LivePredicate Live>
  void merge(Live&& live) {
    install(merged(live));
  }

  void merge(const SlidingWindow& window) { merge(not_expired(window)); }

  /// Throws std::logic_error when a T_I entry sits outside its subindex's
  /// range or the global chain is broken.
  void check_invariants() const {
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      const Subindex& s = *subs_[i];
      s.tree.check_invariants();
      s.tree.for_each([&](const Entry& e) {
        if (!s.contains(e.key)) throw std::logic_error("pimtree: entry outside subindex range");
      });
      if (i + 1 < subs_.size() && s.tree.tail_leaf()->next != subs_[i + 1]->tree.head_leaf())
        throw std::logic_error("pimtree: broken global leaf chain");
    }
  }

 private:
  void partition() {
    const std::size_t depth = t_s_.depth();
    d_eff_ = depth == 0 ? 0 : std::min(d_i_, depth - 1);
    const std::size_t n = t_s_.empty() ? 1 : t_s_.node_count(d_eff_);
    const auto seps = t_s_.empty() ? std::vector<Key>{} : t_s_.separators(d_eff_);
    subs_.clear();
    subs_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = std::make_unique<Subindex>();
      s->ordinal = i;
      if (i > 0) s->lo_excl = seps[i - 1];
      if (i + 1 < n) s->hi_incl = seps[i];
      subs_.push_back(std::move(s));
    }
    for (std::size_t i = 0; i + 1 < n; ++i) subs_[i]->tree.link_tail_to(subs_[i + 1]->tree.head_leaf());
    total_.store(0, std::memory_order_relaxed);
  }

  std::size_t w_;
  double m_;
  std::size_t threshold_;
  std::size_t d_i_;
  std::size_t d_eff_ = 0;
  Observer observer_;
  ImmutableTree t_s_;
  std::vector<std::unique_ptr<Subindex>> subs_;
  std::atomic<std::size_t> total_{0};
};

}  // namespace pimtree
