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
#include <chrono>
#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pimtree/core/types.hpp"

namespace pimtree {

enum class IndexKind { BTree, ImTree, PimTree, ChainedB, ChainedIB, RoundRobin };
enum class MergeMode { Blocking, NonBlocking };
enum class JoinMode { TwoWay, SelfJoin };

/// Deliberate defects used to check that verification catches them.
enum class Mutation { None, EdgeIgnoresIndexedFlag };

inline constexpr IndexKind kAllIndexKinds[] = {IndexKind::BTree,    IndexKind::ImTree,    IndexKind::PimTree,
                                               IndexKind::ChainedB, IndexKind::ChainedIB, IndexKind::RoundRobin};

inline std::string to_string(IndexKind k) {
  switch (k) {
    case IndexKind::BTree: return "btree";
    case IndexKind::ImTree: return "imtree";
    case IndexKind::PimTree: return "pimtree";
    case IndexKind::ChainedB: return "chained-b";
    case IndexKind::ChainedIB: return "chained-ib";
    case IndexKind::RoundRobin: return "roundrobin";
  }
  return "?";
}

inline std::string to_string(MergeMode m) { return m == MergeMode::Blocking ? "blocking" : "nonblocking"; }
inline std::string to_string(JoinMode m) { return m == JoinMode::TwoWay ? "twoway" : "self"; }

inline std::string normalize_token(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

inline IndexKind parse_index_kind(std::string_view s) {
  const auto t = normalize_token(s);
  if (t == "btree" || t == "bplustree") return IndexKind::BTree;
  if (t == "imtree") return IndexKind::ImTree;
  if (t == "pimtree") return IndexKind::PimTree;
  if (t == "chainedb" || t == "bchain") return IndexKind::ChainedB;
  if (t == "chainedib" || t == "ibchain") return IndexKind::ChainedIB;
  if (t == "roundrobin" || t == "rr") return IndexKind::RoundRobin;
  throw std::invalid_argument("unknown index kind: " + std::string(s));
}

inline MergeMode parse_merge_mode(std::string_view s) {
  const auto t = normalize_token(s);
  if (t == "blocking") return MergeMode::Blocking;
  if (t == "nonblocking") return MergeMode::NonBlocking;
  throw std::invalid_argument("unknown merge mode: " + std::string(s));
}

inline JoinMode parse_join_mode(std::string_view s) {
  const auto t = normalize_token(s);
  if (t == "twoway" || t == "2way") return JoinMode::TwoWay;
  if (t == "self" || t == "selfjoin") return JoinMode::SelfJoin;
  throw std::invalid_argument("unknown join mode: " + std::string(s));
}

struct EngineConfig {
  IndexKind index = IndexKind::PimTree;
  std::size_t window_r = 1024;
  std::size_t window_s = 1024;
  double merge_ratio = 0.125;
  std::size_t insertion_depth = 4;
  std::size_t ib_fanout = 32;
  std::size_t chain_length = 2;
  std::size_t partitions = 1;
  std::size_t task_size = 8;
  std::size_t threads = 1;
  MergeMode merge_mode = MergeMode::Blocking;
  JoinMode join_mode = JoinMode::TwoWay;
  /// Run the four-step concurrent algorithm even with one thread.
  bool concurrency_control = false;
  /// Work queue slots; 0 picks a default from threads and task size.
  std::size_t queue_capacity = 0;
  /// Pending-insert buffer for non-blocking merge; 0 means 2 * w.
  std::size_t pending_capacity = 0;
  bool collect_results = true;
  /// Latency is sampled for every n-th tuple.
  std::size_t latency_sample_every = 8;
  /// Arrivals before this index count as warm-up and are excluded from
  /// the throughput figure.
  std::size_t measure_from = 0;
  Mutation mutation = Mutation::None;
  /// Workers yield between acquiring a task and probing, which widens the
  /// window in which other workers hold admitted but unindexed tuples.
  bool yield_after_acquire = false;

  void set_window(std::size_t w) { window_r = window_s = w; }
  std::size_t window(StreamId s) const { return s == StreamId::R ? window_r : window_s; }

  bool is_merge_tree() const { return index == IndexKind::ImTree || index == IndexKind::PimTree; }
  bool is_chained() const { return index == IndexKind::ChainedB || index == IndexKind::ChainedIB; }
  bool uses_four_step() const { return threads > 1 || concurrency_control; }

  std::size_t effective_queue_capacity() const {
    return queue_capacity ? queue_capacity : std::max<std::size_t>(1024, threads * task_size * 16);
  }
  std::size_t effective_pending_capacity(std::size_t w) const { return pending_capacity ? pending_capacity : 2 * w; }

  void validate() const {
    if (window_r == 0 || window_s == 0) throw std::invalid_argument("window size must be positive");
    if (join_mode == JoinMode::SelfJoin && window_r != window_s)
      throw std::invalid_argument("self join uses a single window size");
    if (task_size == 0) throw std::invalid_argument("task size must be at least 1");
    if (threads == 0) throw std::invalid_argument("thread count must be at least 1");
    if (!(merge_ratio > 0.0 && merge_ratio <= 1.0)) throw std::invalid_argument("merge ratio must lie in (0, 1]");
    if (is_chained() && chain_length < 2) throw std::invalid_argument("chain length must be at least 2");
    if (index == IndexKind::RoundRobin && partitions == 0) throw std::invalid_argument("partitions must be >= 1");
    if (ib_fanout < 2) throw std::invalid_argument("fan-out must be at least 2");
    if (merge_mode == MergeMode::NonBlocking && !is_merge_tree())
      throw std::invalid_argument("non-blocking merge requires imtree or pimtree");
  }
};

/// Receives emitted results in order. Keeps an order-sensitive hash so runs
/// can be compared without storing results.
class ResultSink {
 public:
  explicit ResultSink(bool collect = true) : collect_(collect) {}

  void emit(const JoinResult& r) {
    ++count_;
    std::uint64_t x = static_cast<std::uint64_t>(r.probe_seq) * 0x9E3779B97F4A7C15ull;
    x ^= static_cast<std::uint64_t>(r.matched_seq) + 0x632BE59BD9B4E019ull + (x << 6) + (x >> 2);
    x ^= static_cast<std::uint64_t>(r.probe_stream == StreamId::S) << 63;
    hash_ = (hash_ ^ x) * 0x100000001B3ull;
    if (collect_) results_.push_back(r);
  }

  std::uint64_t count() const noexcept { return count_; }
  std::uint64_t hash() const noexcept { return hash_; }
  const std::vector<JoinResult>& results() const noexcept { return results_; }
  std::vector<JoinResult>& results() noexcept { return results_; }

 private:
  bool collect_;
  std::uint64_t count_ = 0;
  std::uint64_t hash_ = 0xCBF29CE484222325ull;
  std::vector<JoinResult> results_;
};

struct RunStats {
  std::size_t tuples = 0;
  /// Arrivals covered by `seconds` (those after the warm-up).
  std::size_t measured_tuples = 0;
  std::uint64_t results = 0;
  std::uint64_t result_hash = 0;
  double seconds = 0.0;
  double throughput_tps = 0.0;
  double p50_latency_s = 0.0;
  double p99_latency_s = 0.0;
  std::size_t merges = 0;
  std::size_t nonblocking_fallbacks = 0;
  std::size_t admission_stalls = 0;
  std::vector<JoinResult> output;
};

/// Fills the timing fields from the run start, the moment the measured
/// part began and the end.
template <class TimePoint>
void finish_timing(RunStats& st, std::size_t total, std::size_t measure_from, TimePoint start,
                   std::optional<TimePoint> measured, TimePoint end) {
  const TimePoint from = measured && measure_from < total ? *measured : start;
  st.tuples = total;
  st.measured_tuples = measured && measure_from < total ? total - measure_from : total;
  st.seconds = std::chrono::duration<double>(end - from).count();
  st.throughput_tps = st.seconds > 0 ? static_cast<double>(st.measured_tuples) / st.seconds : 0.0;
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  const std::size_t k = std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size())));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace pimtree
