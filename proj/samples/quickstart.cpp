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


// Joins two small synthetic streams with a PIM-Tree index, checks the
// output against the nested-loop oracle, then uses the index on its own.

#include <iostream>

#include "pimtree/core/workload.hpp"
#include "pimtree/join/engine.hpp"
#include "pimtree/pimtree.hpp"

int main() {
  using namespace pimtree;

  EngineConfig cfg;
  cfg.index = IndexKind::PimTree;
  cfg.set_window(1024);
  cfg.merge_ratio = 0.125;
  cfg.threads = 2;
  cfg.concurrency_control = true;
  cfg.collect_results = true;

  // Band width for an average of two matches per probe.
  const Key lo = 0, hi = 1 << 20;
  const Key diff = calibrate_diff(cfg.window_s, lo, hi, 2.0);
  WorkloadSpec spec{UniformKeys{lo, hi}, 20000, 42};
  const auto r = generate_keys(spec);
  spec.seed = 43;
  const auto s = generate_keys(spec);
  const auto arrivals = interleave(r, s);

  const RunStats stats = run_join(cfg, arrivals, diff);
  std::cout << "tuples " << stats.tuples << ", results " << stats.results << ", "
            << stats.throughput_tps << " tuples/s, " << stats.merges << " merges\n";
  for (std::size_t i = 0; i < 3 && i < stats.output.size(); ++i) {
    const JoinResult& j = stats.output[i];
    std::cout << "  " << (j.probe_stream == StreamId::R ? "R" : "S") << j.probe_seq << " key " << j.probe_key
              << " matches seq " << j.matched_seq << " key " << j.matched_key << '\n';
  }

  const VerifyReport check = verify_against_oracle(cfg, arrivals, diff);
  std::cout << "oracle: " << (check.pass ? "match" : "MISMATCH " + check.detail) << '\n';

  // The index alone: single-threaded, no locking.
  PimTree<NullMutex> index(/*w=*/4096, /*m=*/0.25, /*insertion_depth=*/2);
  for (Seq i = 0; i < 4096; ++i) {
    if (index.insert({(i * 7919) % 10000, i})) index.merge([](const Entry&) { return true; });
  }
  const auto hits = index.search({100, 140}, [](const Entry&) { return true; });
  std::cout << "index: " << index.subindex_count() << " subindexes, " << hits.size() << " keys in [100, 140]\n";
  return check.pass ? 0 : 1;
}
