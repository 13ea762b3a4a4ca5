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
#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pimtree/core/types.hpp"

namespace pimtree {

enum class Eviction {
  FlagOnly,  // oldest live tuple is flagged expired and stays until batch removal
  Eager,     // oldest live tuple is returned for immediate index deletion
};

/// Raised when the physical ring has no free slot: expired slots were not
/// reclaimed in time, which means maintenance (merge/drop) fell behind.
class CapacityExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference to a stored slot.
struct SlotRef {
  Seq seq = 0;
  Key key = 0;

  friend bool operator==(const SlotRef&, const SlotRef&) = default;
};

/// Count-based sliding window over one stream, stored as a ring of flagged
/// slots addressed by sequence number.
///
/// The logical window holds the `logical_size()` most recent tuples. Slots
/// between tail_seq() and head_seq() are physically stored; the ones older
/// than live_begin() are expired but may still be referenced by an index
/// until reclaim_until() releases them.
///
/// Appends are single-writer. Keys and flags of stored slots may be read
/// concurrently; flags are individually atomic.
class SlidingWindow {
 public:
  static constexpr std::uint8_t kExpired = 0x1;
  static constexpr std::uint8_t kIndexed = 0x2;

  SlidingWindow(std::size_t logical_size, std::size_t physical_capacity)
      : w_(logical_size) {
    if (logical_size == 0) throw std::invalid_argument("window size must be positive");
    if (physical_capacity < logical_size + 1) physical_capacity = logical_size + 1;
    capacity_ = std::bit_ceil(physical_capacity);
    mask_ = capacity_ - 1;
    slots_ = std::make_unique<Slot[]>(capacity_);
  }

  SlidingWindow(const SlidingWindow&) = delete;
  SlidingWindow& operator=(const SlidingWindow&) = delete;

  std::size_t logical_size() const noexcept { return w_; }
  std::size_t capacity() const noexcept { return capacity_; }

  /// Sequence number the next append must carry.
  Seq head_seq() const noexcept { return head_.load(std::memory_order_acquire); }
  /// Oldest physically stored sequence number.
  Seq tail_seq() const noexcept { return tail_.load(std::memory_order_acquire); }
  /// Oldest non-expired sequence number.
  Seq live_begin() const noexcept { return live_begin_.load(std::memory_order_acquire); }

  std::size_t live_count() const noexcept {
    return static_cast<std::size_t>(head_seq() - live_begin());
  }
  std::size_t stored_count() const noexcept {
    return static_cast<std::size_t>(head_seq() - tail_seq());
  }
  bool full() const noexcept { return stored_count() >= capacity_; }

  bool stored(Seq seq) const noexcept { return seq >= tail_seq() && seq < head_seq(); }

  /// Appends `tuple` at the head. When the window already held w live tuples
  /// the oldest one is flagged expired; with Eager eviction it is also
  /// returned so the caller can delete it from its index.
  std::optional<SlotRef> append(const Tuple& tuple, Eviction eviction) {
    const Seq head = head_.load(std::memory_order_relaxed);
    if (tuple.seq != head) {
      throw std::invalid_argument("window append out of sequence");
    }
    if (static_cast<std::size_t>(head - tail_.load(std::memory_order_relaxed)) >= capacity_) {
      throw CapacityExhausted("sliding window ring is full; expired slots were not reclaimed");
    }
    Slot& slot = slots_[static_cast<std::size_t>(head) & mask_];
    slot.key = tuple.key;
    slot.flags.store(0, std::memory_order_relaxed);
    head_.store(head + 1, std::memory_order_release);

    const Seq live = live_begin_.load(std::memory_order_relaxed);
    if (static_cast<std::size_t>(head + 1 - live) <= w_) return std::nullopt;

    Slot& oldest = slots_[static_cast<std::size_t>(live) & mask_];
    oldest.flags.fetch_or(kExpired, std::memory_order_release);
    live_begin_.store(live + 1, std::memory_order_release);
    if (eviction == Eviction::Eager) return SlotRef{live, oldest.key};
    return std::nullopt;
  }

  /// Releases stored slots older than `seq`. Never releases live slots.
  void reclaim_until(Seq seq) noexcept {
    const Seq limit = std::min(seq, live_begin());
    if (limit > tail_.load(std::memory_order_relaxed)) {
      tail_.store(limit, std::memory_order_release);
    }
  }

  Key key(Seq seq) const noexcept { return slot(seq).key; }

  bool expired(Seq seq) const noexcept {
    if (seq < tail_seq()) return true;
    return (slot(seq).flags.load(std::memory_order_acquire) & kExpired) != 0;
  }

  bool indexed(Seq seq) const noexcept {
    return (slot(seq).flags.load(std::memory_order_acquire) & kIndexed) != 0;
  }

  void mark_indexed(Seq seq) noexcept {
    slot(seq).flags.fetch_or(kIndexed, std::memory_order_release);
  }

  /// Visits, in ascending seq, every stored slot with key in `range` and
  /// seq in [first, last] (clamped to the stored region).
  template <class Fn>
  void scan(KeyRange range, Seq first, Seq last, Fn&& fn) const {
    first = std::max(first, tail_seq());
    last = std::min(last, head_seq() - 1);
    for (Seq s = first; s <= last; ++s) {
      const Key k = slot(s).key;
      if (range.contains(k)) fn(s, k);
    }
  }

 private:
  struct Slot {
    Key key = 0;
    std::atomic<std::uint8_t> flags{0};
  };

  const Slot& slot(Seq seq) const noexcept { return slots_[static_cast<std::size_t>(seq) & mask_]; }
  Slot& slot(Seq seq) noexcept { return slots_[static_cast<std::size_t>(seq) & mask_]; }

  std::size_t w_;
  std::size_t capacity_ = 0;
  std::size_t mask_ = 0;
  std::unique_ptr<Slot[]> slots_;
  std::atomic<Seq> head_{0};
  std::atomic<Seq> tail_{0};
  std::atomic<Seq> live_begin_{0};
};

/// Region selector for window_scan.
struct ScanRegion {
  static ScanRegion all() { return {}; }
  static ScanRegion from_seq(Seq s) { return {s}; }
  std::optional<Seq> from;
};

/// Slots with key in `range`, seq in [t_e, t_l] and (for FromSeq) seq >= s,
/// in ascending seq. Slots older than t_e count as expired for this scope.
inline std::vector<SlotRef> window_scan(const SlidingWindow& window, KeyRange range, Seq t_e,
                                        Seq t_l, ScanRegion region = ScanRegion::all()) {
  if (t_e > t_l) throw std::invalid_argument("window_scan requires t_e <= t_l");
  std::vector<SlotRef> out;
  const Seq first = region.from ? std::max(t_e, *region.from) : t_e;
  window.scan(range, first, t_l, [&](Seq s, Key k) { out.push_back({s, k}); });
  return out;
}

}  // namespace pimtree
