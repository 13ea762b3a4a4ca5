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
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace pimtree {

/// Join attribute. Keys are signed integers; continuous workloads are scaled
/// onto this domain by the workload generator.
using Key = std::int64_t;

/// Per-stream arrival counter. The first tuple of every stream has seq 0 and
/// sequence numbers are contiguous within a stream.
using Seq = std::int64_t;

inline constexpr Key kMinKey = std::numeric_limits<Key>::min();
inline constexpr Key kMaxKey = std::numeric_limits<Key>::max();

enum class StreamId : std::uint8_t { R = 0, S = 1 };

constexpr StreamId opposite(StreamId s) noexcept {
  return s == StreamId::R ? StreamId::S : StreamId::R;
}

constexpr std::size_t index_of(StreamId s) noexcept { return static_cast<std::size_t>(s); }

struct Tuple {
  StreamId stream = StreamId::R;
  Seq seq = 0;
  Key key = 0;

  friend bool operator==(const Tuple&, const Tuple&) = default;
};

/// An index entry: join key plus the window position of the tuple.
/// Entries order by (key, seq) so duplicate keys have a stable order.
struct Entry {
  Key key = 0;
  Seq seq = 0;

  friend auto operator<=>(const Entry&, const Entry&) = default;
};

/// Closed key interval [lo, hi]. An interval with lo > hi is empty.
struct KeyRange {
  Key lo = 0;
  Key hi = -1;

  bool empty() const noexcept { return lo > hi; }
  bool contains(Key k) const noexcept { return lo <= k && k <= hi; }
};

/// |a - b| <= diff.
struct BandPredicate {
  Key diff = 0;

  explicit BandPredicate(Key d = 0) : diff(d) {
    if (d < 0) throw std::invalid_argument("band predicate diff must be non-negative");
  }

  bool matches(Key a, Key b) const noexcept {
    return a >= b ? static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b) <=
                        static_cast<std::uint64_t>(diff)
                  : static_cast<std::uint64_t>(b) - static_cast<std::uint64_t>(a) <=
                        static_cast<std::uint64_t>(diff);
  }

  /// Key range a probe with `key` has to look up, saturated at the domain ends.
  KeyRange probe_range(Key key) const noexcept {
    Key lo = key < kMinKey + diff ? kMinKey : key - diff;
    Key hi = key > kMaxKey - diff ? kMaxKey : key + diff;
    return {lo, hi};
  }
};

/// One output record of the window join.
struct JoinResult {
  StreamId probe_stream = StreamId::R;
  Seq probe_seq = 0;
  Seq matched_seq = 0;
  Key probe_key = 0;
  Key matched_key = 0;

  friend bool operator==(const JoinResult&, const JoinResult&) = default;
};

}  // namespace pimtree
