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

#include <atomic>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pimtree {

/// Lock classes in the order a thread may acquire them. Subindex locks of
/// equal rank must be taken in ascending ordinal order.
enum class LockRank : int { Queue = 0, Index = 1, Edge = 2, Propagation = 3 };

/// Per-thread record of held locks. Acquisitions that break the global
/// order are counted rather than aborting the worker.
class LockOrderChecker {
 public:
  static bool acquire(LockRank rank, std::size_t ordinal = 0) {
    bool ok = true;
    for (const auto& [r, o] : held()) {
      if (static_cast<int>(r) > static_cast<int>(rank) || (r == rank && o >= ordinal)) ok = false;
    }
    if (!ok) violations().fetch_add(1, std::memory_order_relaxed);
    held().emplace_back(rank, ordinal);
    return ok;
  }

  static void release(LockRank rank, std::size_t ordinal = 0) {
    auto& h = held();
    for (auto it = h.rbegin(); it != h.rend(); ++it) {
      if (it->first == rank && it->second == ordinal) {
        h.erase(std::next(it).base());
        return;
      }
    }
  }

  static std::size_t held_count() { return held().size(); }
  static std::size_t violation_count() { return violations().load(); }
  static void reset_violations() { violations().store(0); }

 private:
  static std::vector<std::pair<LockRank, std::size_t>>& held() {
    thread_local std::vector<std::pair<LockRank, std::size_t>> h;
    return h;
  }
  static std::atomic<std::size_t>& violations() {
    static std::atomic<std::size_t> v{0};
    return v;
  }
};

#ifdef PIMTREE_LOCK_ORDER_CHECK
inline constexpr bool kLockOrderCheck = true;
#else
inline constexpr bool kLockOrderCheck = false;
#endif

inline void note_acquire(LockRank rank, std::size_t ordinal = 0) {
  if constexpr (kLockOrderCheck) LockOrderChecker::acquire(rank, ordinal);
}
inline void note_release(LockRank rank, std::size_t ordinal = 0) {
  if constexpr (kLockOrderCheck) LockOrderChecker::release(rank, ordinal);
}

/// Lock wrapper that reports to the checker when it is enabled.
template <class Lock, LockRank Rank>
class RankedLock {
 public:
  void lock() {
    note_acquire(Rank);
    mu_.lock();
  }
  void unlock() {
    mu_.unlock();
    note_release(Rank);
  }
  bool try_lock() {
    if (!mu_.try_lock()) return false;
    note_acquire(Rank);
    return true;
  }

 private:
  Lock mu_;
};

/// Subindex lock observer feeding the checker.
struct LockOrderObserver {
  void on_acquire(std::size_t i) { note_acquire(LockRank::Index, i); }
  void on_release(std::size_t i) { note_release(LockRank::Index, i); }
  void on_ts_done() {}
};

}  // namespace pimtree
