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

#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimtree/core/types.hpp"
#include "pimtree/join/config.hpp"

namespace pimtree {

/// Checks that arrivals carry contiguous per-stream sequence numbers, and
/// that a self join only has R tuples.
inline void validate_arrivals(std::span<const Tuple> arrivals, JoinMode mode) {
  Seq next[2] = {0, 0};
  for (const Tuple& t : arrivals) {
    if (mode == JoinMode::SelfJoin && t.stream != StreamId::R)
      throw std::invalid_argument("self join arrivals must all belong to stream R");
    if (t.seq != next[index_of(t.stream)]) throw std::invalid_argument("arrival sequence numbers are not contiguous");
    ++next[index_of(t.stream)];
  }
}

/// Nested-loop window join over the arrival order. Each arriving tuple is
/// compared with the last w tuples of the opposite stream (its own stream in
/// a self join) that arrived before it, in seq order.
inline std::vector<JoinResult> nested_loop_join(std::span<const Tuple> arrivals, Key diff, std::size_t w_r,
                                                std::size_t w_s, JoinMode mode = JoinMode::TwoWay) {
  validate_arrivals(arrivals, mode);
  const BandPredicate pred(diff);
  std::vector<Key> keys[2];
  const std::size_t w[2] = {w_r, w_s};
  std::vector<JoinResult> out;
  for (const Tuple& t : arrivals) {
    const std::size_t own = index_of(t.stream);
    const std::size_t opp = mode == JoinMode::SelfJoin ? own : 1 - own;
    const auto& other = keys[opp];
    const std::size_t n = other.size();
    const std::size_t first = n > w[opp] ? n - w[opp] : 0;
    for (std::size_t s = first; s < n; ++s) {
      if (pred.matches(t.key, other[s])) out.push_back({t.stream, t.seq, static_cast<Seq>(s), t.key, other[s]});
    }
    keys[own].push_back(t.key);
  }
  return out;
}

inline std::vector<JoinResult> nested_loop_join(std::span<const Tuple> arrivals, Key diff, const EngineConfig& cfg) {
  return nested_loop_join(arrivals, diff, cfg.window_r, cfg.window_s, cfg.join_mode);
}

inline std::string describe(const JoinResult& r) {
  std::ostringstream os;
  os << (r.probe_stream == StreamId::R ? 'R' : 'S') << '#' << r.probe_seq << "(key " << r.probe_key << ") ~ #"
     << r.matched_seq << "(key " << r.matched_key << ')';
  return os.str();
}

/// Empty when both streams are identical; otherwise the first divergence.
inline std::optional<std::string> first_divergence(const std::vector<JoinResult>& expected,
                                                   const std::vector<JoinResult>& actual) {
  const std::size_t n = std::min(expected.size(), actual.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(expected[i] == actual[i])) {
      return "result " + std::to_string(i) + ": expected " + describe(expected[i]) + ", got " + describe(actual[i]);
    }
  }
  if (expected.size() != actual.size()) {
    std::string msg = "result count: expected " + std::to_string(expected.size()) + ", got " +
                      std::to_string(actual.size());
    if (expected.size() > n) msg += "; first missing " + describe(expected[n]);
    else msg += "; first extra " + describe(actual[n]);
    return msg;
  }
  return std::nullopt;
}

}  // namespace pimtree
