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
#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "pimtree/core/types.hpp"
#include "pimtree/join/lock_order.hpp"

namespace pimtree {

enum class ItemStatus : std::uint8_t { Available = 0, Active = 1, Completed = 2 };

struct WorkItem {
  Tuple tuple;
  /// Tuples of each stream that arrived before this one.
  std::array<Seq, 2> before{0, 0};
  Seq t_e = 0;
  Seq t_l = -1;
  std::atomic<ItemStatus> status{ItemStatus::Available};
  std::vector<Entry> matches;
  std::chrono::steady_clock::time_point enqueued{};
  bool sampled = false;
};

/// Arrival-ordered ring of work items. Pushing and acquiring happen under
/// the queue lock; the head is advanced only by whoever holds the
/// propagation right, without the queue lock.
class WorkQueue {
 public:
  using Mutex = RankedLock<std::mutex, LockRank::Queue>;

  explicit WorkQueue(std::size_t capacity)
      : cap_(std::bit_ceil(std::max<std::size_t>(capacity, 2))), mask_(cap_ - 1), items_(new WorkItem[cap_]) {}

  std::size_t capacity() const noexcept { return cap_; }
  Mutex& mutex() noexcept { return mu_; }

  /// Positions are absolute: item p lives in slot p mod capacity.
  WorkItem& at(std::size_t pos) noexcept { return items_[pos & mask_]; }
  const WorkItem& at(std::size_t pos) const noexcept { return items_[pos & mask_]; }

  std::size_t head() const noexcept { return head_.load(std::memory_order_acquire); }
  std::size_t tail() const noexcept { return tail_.load(std::memory_order_acquire); }
  std::size_t size() const noexcept { return tail() - head(); }
  std::size_t free_slots() const noexcept { return cap_ - size(); }

  // The *_locked members require the queue lock.

  /// Appends an Available item; false when the ring is full.
  bool push_locked(const Tuple& t, std::array<Seq, 2> before) {
    const std::size_t tl = tail_.load(std::memory_order_relaxed);
    if (tl - head() >= cap_) return false;
    WorkItem& it = items_[tl & mask_];
    it.tuple = t;
    it.before = before;
    it.matches.clear();
    it.sampled = false;
    it.status.store(ItemStatus::Available, std::memory_order_relaxed);
    tail_.store(tl + 1, std::memory_order_release);
    return true;
  }

  /// Flips up to `max` Available items to Active, calling on_acquire(item)
  /// for each so the caller can record window boundaries. Returns the first
  /// acquired position and the count.
  template <class OnAcquire>
  std::pair<std::size_t, std::size_t> acquire_locked(std::size_t max, OnAcquire&& on_acquire) {
    const std::size_t first = cursor_;
    const std::size_t tl = tail_.load(std::memory_order_relaxed);
    std::size_t n = 0;
    while (n < max && cursor_ < tl) {
      WorkItem& it = items_[cursor_ & mask_];
      on_acquire(it);
      it.status.store(ItemStatus::Active, std::memory_order_release);
      ++cursor_;
      ++n;
    }
    return {first, n};
  }

  std::size_t available_locked() const noexcept { return tail_.load(std::memory_order_relaxed) - cursor_; }

  std::pair<std::size_t, std::size_t> acquire(std::size_t max) {
    std::lock_guard g(mu_);
    return acquire_locked(max, [](WorkItem&) {});
  }

  bool push(const Tuple& t, std::array<Seq, 2> before = {0, 0}) {
    std::lock_guard g(mu_);
    return push_locked(t, before);
  }

  static void complete(WorkItem& it) noexcept { it.status.store(ItemStatus::Completed, std::memory_order_release); }

  /// Head item when it is Completed, otherwise nullptr.
  WorkItem* completed_head() noexcept {
    const std::size_t h = head_.load(std::memory_order_relaxed);
    if (h == tail()) return nullptr;
    WorkItem& it = items_[h & mask_];
    return it.status.load(std::memory_order_acquire) == ItemStatus::Completed ? &it : nullptr;
  }

  /// Removes the head item. Only the propagating thread calls this.
  void pop() noexcept { head_.store(head_.load(std::memory_order_relaxed) + 1, std::memory_order_release); }

 private:
  std::size_t cap_;
  std::size_t mask_;
  std::unique_ptr<WorkItem[]> items_;
  Mutex mu_;
  std::size_t cursor_ = 0;
  std::atomic<std::size_t> head_{0};
  std::atomic<std::size_t> tail_{0};
};

}  // namespace pimtree
