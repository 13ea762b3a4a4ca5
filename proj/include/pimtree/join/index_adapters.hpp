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

#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pimtree/baselines/chained_index.hpp"
#include "pimtree/baselines/round_robin.hpp"
#include "pimtree/btree.hpp"
#include "pimtree/imtree.hpp"
#include "pimtree/join/config.hpp"
#include "pimtree/join/lock_order.hpp"
#include "pimtree/pimtree.hpp"

namespace pimtree {

// Adapters give every index the same surface for the join engines:
// probe(range, lo_seq, hi_seq, out) appends matches with seq in [lo, hi].

namespace detail {
inline auto seq_between(Seq lo, Seq hi) {
  return [lo, hi](const Entry& e) { return e.seq >= lo && e.seq <= hi; };
}
}  // namespace detail

template <class Lock>
class BTreeAdapter {
 public:
  static constexpr Eviction kEviction = Eviction::Eager;
  static constexpr bool kMergeable = false;
  static constexpr bool kReleases = false;

  explicit BTreeAdapter(const EngineConfig&, std::size_t) {}

  void probe(KeyRange r, Seq lo, Seq hi, std::vector<Entry>& out) {
    std::lock_guard g(mu_);
    const auto keep = detail::seq_between(lo, hi);
    tree_.for_each_in_range(r, [&](const Entry& e) {
      if (keep(e)) out.push_back(e);
    });
  }
  bool insert(Entry e) {
    std::lock_guard g(mu_);
    tree_.insert(e);
    return false;
  }
  void erase(Entry e) {
    std::lock_guard g(mu_);
    tree_.erase(e);
  }
  void release(Seq) {}
  void merge(Seq) {}
  ImmutableTree build_merged(Seq) const { throw std::logic_error("btree index does not merge"); }
  void install(ImmutableTree) { throw std::logic_error("btree index does not merge"); }
  std::size_t size() const { return tree_.size(); }
  std::vector<std::size_t> insert_histogram() const { return {}; }

 private:
  RankedLock<Lock, LockRank::Index> mu_;
  MutableBTree<> tree_;
};

template <class Lock>
class ImTreeAdapter {
 public:
  static constexpr Eviction kEviction = Eviction::FlagOnly;
  static constexpr bool kMergeable = true;
  static constexpr bool kReleases = false;

  ImTreeAdapter(const EngineConfig& cfg, std::size_t w) : tree_(w, cfg.merge_ratio, cfg.ib_fanout) {}

  void probe(KeyRange r, Seq lo, Seq hi, std::vector<Entry>& out) {
    std::lock_guard g(mu_);
    tree_.search(r, detail::seq_between(lo, hi), out);
  }
  bool insert(Entry e) {
    std::lock_guard g(mu_);
    return tree_.insert(e);
  }
  void erase(Entry) {}
  void release(Seq) {}
  void merge(Seq cut) {
    std::lock_guard g(mu_);
    tree_.merge(seq_at_least(cut));
  }
  /// Reads without the lock; callers guarantee that no insert runs meanwhile.
  ImmutableTree build_merged(Seq cut) const { return tree_.merged(seq_at_least(cut)); }
  void install(ImmutableTree t) {
    std::lock_guard g(mu_);
    tree_.install(std::move(t));
  }
  std::size_t size() const { return tree_.size(); }
  std::vector<std::size_t> insert_histogram() const { return {tree_.inserted_since_merge()}; }
  const ImTree<>& tree() const { return tree_; }

 private:
  RankedLock<Lock, LockRank::Index> mu_;
  ImTree<> tree_;
};

template <class Lock, class Observer = NullLockObserver>
class PimAdapter {
 public:
  static constexpr Eviction kEviction = Eviction::FlagOnly;
  static constexpr bool kMergeable = true;
  static constexpr bool kReleases = false;

  PimAdapter(const EngineConfig& cfg, std::size_t w) : tree_(w, cfg.merge_ratio, cfg.insertion_depth, cfg.ib_fanout) {}

  void probe(KeyRange r, Seq lo, Seq hi, std::vector<Entry>& out) {
    tree_.search_unordered(r, detail::seq_between(lo, hi), out);
  }
  bool insert(Entry e) { return tree_.insert(e); }
  void erase(Entry) {}
  void release(Seq) {}
  void merge(Seq cut) { tree_.merge(seq_at_least(cut)); }
  ImmutableTree build_merged(Seq cut) const { return tree_.merged(seq_at_least(cut)); }
  void install(ImmutableTree t) { tree_.install(std::move(t)); }
  std::size_t size() const { return tree_.size(); }
  std::vector<std::size_t> insert_histogram() const { return tree_.insert_histogram(); }
  PimTree<Lock, Observer>& tree() { return tree_; }

 private:
  PimTree<Lock, Observer> tree_;
};

template <class Lock>
class ChainedAdapter {
 public:
  static constexpr Eviction kEviction = Eviction::FlagOnly;
  static constexpr bool kMergeable = false;
  static constexpr bool kReleases = true;

  ChainedAdapter(const EngineConfig& cfg, std::size_t w)
      : chain_(w, cfg.chain_length, cfg.index == IndexKind::ChainedIB ? ChainVariant::IBChain : ChainVariant::BChain,
               cfg.ib_fanout) {}

  void probe(KeyRange r, Seq lo, Seq hi, std::vector<Entry>& out) {
    std::lock_guard g(mu_);
    chain_.search_unordered(r, detail::seq_between(lo, hi), out);
  }
  bool insert(Entry e) {
    std::lock_guard g(mu_);
    chain_.insert(e);
    return false;
  }
  void erase(Entry) {}
  void release(Seq cut) {
    std::lock_guard g(mu_);
    chain_.release(cut);
  }
  void merge(Seq) {}
  ImmutableTree build_merged(Seq) const { throw std::logic_error("chained index does not merge"); }
  void install(ImmutableTree) { throw std::logic_error("chained index does not merge"); }
  std::size_t size() const { return chain_.size(); }
  std::vector<std::size_t> insert_histogram() const { return {}; }

 private:
  RankedLock<Lock, LockRank::Index> mu_;
  ChainedIndex<> chain_;
};

/// Single-threaded only: the round-robin baseline's parallel form has its
/// own engine.
template <class Lock>
class RoundRobinAdapter {
 public:
  static constexpr Eviction kEviction = Eviction::Eager;
  static constexpr bool kMergeable = false;
  static constexpr bool kReleases = false;

  RoundRobinAdapter(const EngineConfig& cfg, std::size_t) : idx_(cfg.partitions) {}

  void probe(KeyRange r, Seq lo, Seq hi, std::vector<Entry>& out) {
    idx_.search_unordered(r, detail::seq_between(lo, hi), out);
  }
  bool insert(Entry e) {
    idx_.insert(e);
    return false;
  }
  void erase(Entry e) { idx_.erase(e); }
  void release(Seq) {}
  void merge(Seq) {}
  ImmutableTree build_merged(Seq) const { throw std::logic_error("round robin index does not merge"); }
  void install(ImmutableTree) { throw std::logic_error("round robin index does not merge"); }
  std::size_t size() const { return idx_.size(); }
  std::vector<std::size_t> insert_histogram() const {
    std::vector<std::size_t> h;
    for (std::size_t p = 0; p < idx_.partitions(); ++p) h.push_back(idx_.core(p).size());
    return h;
  }

 private:
  RoundRobinIndex<> idx_;
};

/// Runtime-polymorphic index used by the multi-threaded engine.
class ConcurrentIndex {
 public:
  virtual ~ConcurrentIndex() = default;
  virtual Eviction eviction() const = 0;
  virtual bool mergeable() const = 0;
  virtual bool releases() const = 0;
  virtual void probe(KeyRange r, Seq lo, Seq hi, std::vector<Entry>& out) = 0;
  virtual bool insert(Entry e) = 0;
  virtual void erase(Entry e) = 0;
  virtual void release(Seq cut) = 0;
  virtual void merge(Seq cut) = 0;
  virtual ImmutableTree build_merged(Seq cut) const = 0;
  virtual void install(ImmutableTree t) = 0;
  virtual std::size_t size() const = 0;
  virtual std::vector<std::size_t> insert_histogram() const = 0;
};

template <class Impl>
class VirtualIndex final : public ConcurrentIndex {
 public:
  VirtualIndex(const EngineConfig& cfg, std::size_t w) : impl_(cfg, w) {}
  Eviction eviction() const override { return Impl::kEviction; }
  bool mergeable() const override { return Impl::kMergeable; }
  bool releases() const override { return Impl::kReleases; }
  void probe(KeyRange r, Seq lo, Seq hi, std::vector<Entry>& out) override { impl_.probe(r, lo, hi, out); }
  bool insert(Entry e) override { return impl_.insert(e); }
  void erase(Entry e) override { impl_.erase(e); }
  void release(Seq cut) override { impl_.release(cut); }
  void merge(Seq cut) override { impl_.merge(cut); }
  ImmutableTree build_merged(Seq cut) const override { return impl_.build_merged(cut); }
  void install(ImmutableTree t) override { impl_.install(std::move(t)); }
  std::size_t size() const override { return impl_.size(); }
  std::vector<std::size_t> insert_histogram() const override { return impl_.insert_histogram(); }
  Impl& impl() { return impl_; }

 private:
  Impl impl_;
};

#ifdef PIMTREE_LOCK_ORDER_CHECK
using EngineLockObserver = LockOrderObserver;
#else
using EngineLockObserver = NullLockObserver;
#endif

inline std::unique_ptr<ConcurrentIndex> make_concurrent_index(const EngineConfig& cfg, std::size_t w) {
  switch (cfg.index) {
    case IndexKind::BTree: return std::make_unique<VirtualIndex<BTreeAdapter<std::mutex>>>(cfg, w);
    case IndexKind::ImTree: return std::make_unique<VirtualIndex<ImTreeAdapter<std::mutex>>>(cfg, w);
    case IndexKind::PimTree:
      return std::make_unique<VirtualIndex<PimAdapter<std::mutex, EngineLockObserver>>>(cfg, w);
    case IndexKind::ChainedB:
    case IndexKind::ChainedIB: return std::make_unique<VirtualIndex<ChainedAdapter<std::mutex>>>(cfg, w);
    case IndexKind::RoundRobin: break;
  }
  throw std::invalid_argument("round robin uses its own parallel engine");
}

/// Calls fn.template operator()<Adapter>() with the lock-free adapter type
/// matching cfg.index.
template <class Fn>
decltype(auto) with_single_threaded_adapter(const EngineConfig& cfg, Fn&& fn) {
  switch (cfg.index) {
    case IndexKind::BTree: return fn.template operator()<BTreeAdapter<NullMutex>>();
    case IndexKind::ImTree: return fn.template operator()<ImTreeAdapter<NullMutex>>();
    case IndexKind::PimTree: return fn.template operator()<PimAdapter<NullMutex>>();
    case IndexKind::ChainedB:
    case IndexKind::ChainedIB: return fn.template operator()<ChainedAdapter<NullMutex>>();
    case IndexKind::RoundRobin: return fn.template operator()<RoundRobinAdapter<NullMutex>>();
  }
  throw std::invalid_argument("unknown index kind");
}

}  // namespace pimtree
