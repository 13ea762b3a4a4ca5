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

#include <span>

#include "pimtree/join/config.hpp"
#include "pimtree/join/oracle.hpp"
#include "pimtree/join/parallel_engine.hpp"
#include "pimtree/join/round_robin_parallel.hpp"
#include "pimtree/join/single_threaded.hpp"

namespace pimtree {

/// Runs the join described by `cfg`: the single-threaded engine for one
/// thread without concurrency control, otherwise the four-step engine (or
/// the partitioned engine for round robin, with one partition per thread).
inline RunStats run_join(const EngineConfig& cfg, std::span<const Tuple> arrivals, Key diff) {
  cfg.validate();
  if (cfg.index == IndexKind::RoundRobin && cfg.uses_four_step()) return run_round_robin_parallel(cfg, arrivals, diff);
  if (cfg.uses_four_step()) return run_parallel(cfg, arrivals, diff);
  return run_single_threaded(cfg, arrivals, diff);
}

struct VerifyReport {
  bool pass = false;
  std::size_t expected = 0;
  std::size_t actual = 0;
  std::string detail;
};

/// Runs the engine and the nested-loop oracle on the same arrivals and
/// compares results and emission order exactly.
inline VerifyReport verify_against_oracle(EngineConfig cfg, std::span<const Tuple> arrivals, Key diff) {
  cfg.collect_results = true;
  const auto expected = nested_loop_join(arrivals, diff, cfg);
  const auto got = run_join(cfg, arrivals, diff);
  VerifyReport rep;
  rep.expected = expected.size();
  rep.actual = got.output.size();
  if (auto d = first_divergence(expected, got.output)) {
    rep.detail = *d;
  } else {
    rep.pass = true;
  }
  return rep;
}

}  // namespace pimtree
