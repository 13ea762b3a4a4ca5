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


#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "pimtree/core/sliding_window.hpp"
#include "pimtree/imtree.hpp"

namespace pimtree {
namespace {

auto all_live = [](const Entry&) { return true; };

TEST(ImTree, MergeThresholdArithmetic) {
  ImTree<> a(4, 1.0);
  EXPECT_FALSE(a.insert({1, 0}));
  EXPECT_FALSE(a.insert({2, 1}));
  EXPECT_FALSE(a.insert({3, 2}));
  EXPECT_TRUE(a.insert({4, 3}));
  ImTree<> b(4, 0.5);
  EXPECT_FALSE(b.insert({1, 0}));
  EXPECT_TRUE(b.insert({2, 1}));
  EXPECT_EQ(merge_threshold(0.3, 10), 3u);
  EXPECT_EQ(merge_threshold(0.125, 1000), 125u);
  EXPECT_THROW(merge_threshold(0.0, 10), std::invalid_argument);
  EXPECT_THROW(merge_threshold(1.5, 10), std::invalid_argument);
}

TEST(ImTree, InsertsLeaveTsUntouched) {
  ImTree<> t(64, 0.5);
  for (Seq i = 0; i < 32; ++i) t.insert({i * 3, i});
  t.merge(all_live);
  const std::vector<Entry> before(t.t_s().entries().begin(), t.t_s().entries().end());
  const std::vector<Key> keys_before(t.t_s().inner_keys().begin(), t.t_s().inner_keys().end());
  for (Seq i = 32; i < 60; ++i) t.insert({i, i});
  EXPECT_EQ(std::vector<Entry>(t.t_s().entries().begin(), t.t_s().entries().end()), before);
  EXPECT_EQ(std::vector<Key>(t.t_s().inner_keys().begin(), t.t_s().inner_keys().end()), keys_before);
}

TEST(ImTree, SearchFreshAndPreMerge) {
  ImTree<> t(16, 0.5);
  EXPECT_TRUE(t.search({0, 100}, all_live).empty());
  t.insert({42, 0});
  const auto hits = t.search({40, 45}, all_live);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], (Entry{42, 0}));
}

TEST(ImTree, MergeSetArithmetic) {
  ImTree<> t(8, 1.0);
  for (Seq i = 0; i < 3; ++i) t.insert({i + 1, i});
  t.merge(all_live);
  EXPECT_EQ(t.t_s().size(), 3u);
  t.insert({4, 3});
  // Entry with key 2 (seq 1) expired.
  t.merge([](const Entry& e) { return e.seq != 1; });
  const std::vector<Entry> want{{1, 0}, {3, 2}, {4, 3}};
  EXPECT_EQ(std::vector<Entry>(t.t_s().entries().begin(), t.t_s().entries().end()), want);
  EXPECT_EQ(t.t_i().size(), 0u);
  EXPECT_EQ(t.inserted_since_merge(), 0u);
}

TEST(ImTree, IdempotentMerge) {
  ImTree<> t(100, 0.5);
  std::mt19937_64 rng(1);
  for (Seq i = 0; i < 50; ++i) t.insert({static_cast<Key>(rng() % 30), i});
  t.merge(all_live);
  const std::vector<Entry> once(t.t_s().entries().begin(), t.t_s().entries().end());
  t.merge(all_live);
  EXPECT_EQ(std::vector<Entry>(t.t_s().entries().begin(), t.t_s().entries().end()), once);
}

// Stream through a flagged window; after every merge and at random points
// the index search must equal a window scan.
TEST(ImTree, StreamMatchesWindowScan) {
  for (double m : {1.0 / 8, 1.0 / 2, 1.0}) {
    std::mt19937_64 rng(7);
    const std::size_t w = 512;
    SlidingWindow win(w, 4 * w);
    ImTree<> t(w, m);
    std::size_t checks = 0;
    for (Seq s = 0; s < 10000; ++s) {
      const Key k = static_cast<Key>(rng() % 2000);
      win.append({StreamId::R, s, k}, Eviction::FlagOnly);
      const bool merged = t.insert({k, s});
      if (merged) {
        t.merge(win);
        win.reclaim_until(win.live_begin());
      }
      if (merged || rng() % 50 == 0) {
        for (int q = 0; q < (merged ? 100 : 3); ++q) {
          const Key a = static_cast<Key>(rng() % 2100) - 50;
          const KeyRange r{a, a + static_cast<Key>(rng() % 40)};
          std::vector<Entry> want;
          for (const auto& ref : window_scan(win, r, win.live_begin(), s)) want.push_back({ref.key, ref.seq});
          std::sort(want.begin(), want.end());
          ASSERT_EQ(t.search(r, win), want) << "seq " << s;
          ++checks;
        }
      }
    }
    EXPECT_GT(checks, 1000u);
  }
}

TEST(MergeLive, TwoWayMergeFiltersSortedSide) {
  const std::vector<Entry> sorted{{1, 0}, {3, 1}, {5, 2}};
  const std::vector<Entry> chain{{2, 5}, {5, 1}, {6, 6}};
  const auto out = merge_live(std::span<const Entry>(sorted), chain.size(),
                              [](const Entry& e) { return e.seq != 1; },
                              [&](auto&& fn) { for (const auto& e : chain) fn(e); });
  // Chain entries are always kept; the sorted side is filtered.
  const std::vector<Entry> want{{1, 0}, {2, 5}, {5, 1}, {5, 2}, {6, 6}};
  EXPECT_EQ(out, want);
}

}  // namespace
}  // namespace pimtree
