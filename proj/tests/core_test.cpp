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
#include <deque>
#include <random>
#include <set>

#include "pimtree/core/sliding_window.hpp"
#include "pimtree/core/types.hpp"
#include "pimtree/core/workload.hpp"

namespace pimtree {
namespace {

Tuple r(Seq seq, Key key) { return {StreamId::R, seq, key}; }

TEST(BandPredicate, MatchesIsAbsoluteDifference) {
  const BandPredicate p(3);
  EXPECT_TRUE(p.matches(10, 13));
  EXPECT_TRUE(p.matches(13, 10));
  EXPECT_FALSE(p.matches(10, 14));
  EXPECT_TRUE(BandPredicate(0).matches(5, 5));
  EXPECT_FALSE(BandPredicate(0).matches(5, 6));
  EXPECT_THROW(BandPredicate(-1), std::invalid_argument);
}

TEST(BandPredicate, ProbeRangeSaturatesAtDomainEnds) {
  const BandPredicate p(10);
  EXPECT_EQ(p.probe_range(kMaxKey - 3).hi, kMaxKey);
  EXPECT_EQ(p.probe_range(kMinKey + 3).lo, kMinKey);
  EXPECT_TRUE(p.matches(kMaxKey, kMaxKey - 10));
  EXPECT_FALSE(p.matches(kMaxKey, kMinKey));
  const auto mid = p.probe_range(0);
  EXPECT_EQ(mid.lo, -10);
  EXPECT_EQ(mid.hi, 10);
}

TEST(Entry, OrdersByKeyThenSeq) {
  EXPECT_LT((Entry{1, 9}), (Entry{2, 0}));
  EXPECT_LT((Entry{2, 0}), (Entry{2, 1}));
  EXPECT_TRUE(KeyRange{}.empty());
  EXPECT_TRUE((KeyRange{3, 3}).contains(3));
}

TEST(SlidingWindow, AppendToEmptyWindowDoesNotEvict) {
  SlidingWindow w(4, 8);
  EXPECT_FALSE(w.append(r(0, 7), Eviction::FlagOnly));
  EXPECT_EQ(w.live_count(), 1u);
}

TEST(SlidingWindow, FlagOnlyEvictionMarksOldest) {
  SlidingWindow w(4, 8);
  for (Seq i = 0; i < 4; ++i) w.append(r(i, i * 10), Eviction::FlagOnly);
  EXPECT_FALSE(w.append(r(4, 40), Eviction::FlagOnly));
  EXPECT_TRUE(w.expired(0));
  EXPECT_FALSE(w.expired(1));
  EXPECT_EQ(w.live_count(), 4u);
  EXPECT_EQ(w.stored_count(), 5u);
}

TEST(SlidingWindow, EagerEvictionReturnsSmallestSeq) {
  SlidingWindow w(4, 8);
  for (Seq i = 0; i < 4; ++i) w.append(r(i, 100 + i), Eviction::Eager);
  const auto ev = w.append(r(4, 104), Eviction::Eager);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->seq, 0);
  EXPECT_EQ(ev->key, 100);
}

TEST(SlidingWindow, RejectsOutOfSequenceAndFullRing) {
  SlidingWindow w(2, 4);
  EXPECT_THROW(w.append(r(1, 0), Eviction::FlagOnly), std::invalid_argument);
  for (Seq i = 0; i < 4; ++i) w.append(r(i, 0), Eviction::FlagOnly);
  EXPECT_THROW(w.append(r(4, 0), Eviction::FlagOnly), CapacityExhausted);
  w.reclaim_until(2);
  EXPECT_NO_THROW(w.append(r(4, 0), Eviction::FlagOnly));
}

TEST(SlidingWindow, ReclaimNeverReleasesLiveSlots) {
  SlidingWindow w(4, 16);
  for (Seq i = 0; i < 6; ++i) w.append(r(i, i), Eviction::FlagOnly);
  w.reclaim_until(100);
  EXPECT_EQ(w.tail_seq(), w.live_begin());
  EXPECT_EQ(w.live_begin(), 2);
  EXPECT_TRUE(w.expired(1));
  EXPECT_FALSE(w.expired(2));
}

TEST(SlidingWindow, IndexedFlagIsPerSlot) {
  SlidingWindow w(4, 8);
  w.append(r(0, 1), Eviction::FlagOnly);
  w.append(r(1, 2), Eviction::FlagOnly);
  w.mark_indexed(1);
  EXPECT_FALSE(w.indexed(0));
  EXPECT_TRUE(w.indexed(1));
}

// Live tuples are always the w most recent ones, for every interleaving of
// appends and reclaims.
TEST(SlidingWindow, FifoEvictionProperty) {
  std::mt19937_64 rng(11);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t wsize = 1 + rng() % 20;
    SlidingWindow w(wsize, wsize * 2 + 1);
    std::deque<Seq> live;
    const int n = 1 + static_cast<int>(rng() % 200);
    for (Seq s = 0; s < n; ++s) {
      if (w.full()) w.reclaim_until(w.live_begin());
      const auto ev = w.append(r(s, static_cast<Key>(rng() % 50)), Eviction::Eager);
      live.push_back(s);
      if (live.size() > wsize) {
        ASSERT_TRUE(ev);
        EXPECT_EQ(ev->seq, live.front());
        live.pop_front();
      } else {
        EXPECT_FALSE(ev);
      }
      ASSERT_EQ(w.live_count(), live.size());
      ASSERT_EQ(w.live_begin(), live.front());
      if (rng() % 3 == 0) w.reclaim_until(static_cast<Seq>(rng() % (s + 1)));
    }
  }
}

TEST(WindowScan, EmptyWindowAndDirectPredicate) {
  SlidingWindow w(4, 8);
  EXPECT_TRUE(window_scan(w, {0, 100}, 0, 0).empty());
  w.append(r(0, 1), Eviction::FlagOnly);
  w.append(r(1, 5), Eviction::FlagOnly);
  w.append(r(2, 9), Eviction::FlagOnly);
  const auto hits = window_scan(w, {4, 6}, 0, 2);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], (SlotRef{1, 5}));
  EXPECT_THROW(window_scan(w, {0, 1}, 2, 1), std::invalid_argument);
}

// Brute-force oracle: filter a plain array of all appended tuples.
TEST(WindowScan, MatchesBruteForceFilter) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t wsize = 1 + rng() % 64;
    SlidingWindow w(wsize, 512);
    std::vector<Key> keys;
    const std::size_t n = rng() % 256 + 1;
    for (std::size_t i = 0; i < n; ++i) {
      keys.push_back(static_cast<Key>(rng() % 100));
      w.append(r(static_cast<Seq>(i), keys.back()), Eviction::FlagOnly);
    }
    const Key a = static_cast<Key>(rng() % 100), b = static_cast<Key>(rng() % 100);
    const KeyRange range{std::min(a, b), std::max(a, b)};
    const Seq t_l = static_cast<Seq>(rng() % n);
    const Seq t_e = static_cast<Seq>(rng() % (t_l + 1));
    const bool from = rng() % 2;
    const Seq s = static_cast<Seq>(rng() % n);
    const auto got = window_scan(w, range, t_e, t_l, from ? ScanRegion::from_seq(s) : ScanRegion::all());
    std::vector<SlotRef> want;
    for (Seq i = t_e; i <= t_l; ++i)
      if (range.contains(keys[i]) && (!from || i >= s)) want.push_back({i, keys[i]});
    ASSERT_EQ(got, want);
  }
}

TEST(Workload, DegenerateUniformRange) {
  WorkloadSpec spec{UniformKeys{0, 0}, 3, 1};
  EXPECT_EQ(generate_keys(spec), (std::vector<Key>{0, 0, 0}));
}

TEST(Workload, DeterministicForFixedSeed) {
  for (KeyDistribution d : {KeyDistribution{UniformKeys{0, 1000}}, KeyDistribution{GaussianKeys{}},
                            KeyDistribution{GammaKeys{}}}) {
    WorkloadSpec spec{d, 1000, 99};
    EXPECT_EQ(generate_keys(spec), generate_keys(spec));
    WorkloadSpec other = spec;
    other.seed = 100;
    EXPECT_NE(generate_keys(spec), generate_keys(other));
  }
}

TEST(Workload, RejectsInvalidParameters) {
  EXPECT_THROW(generate_keys({GaussianKeys{0.5, 0.0}, 1, 1}), std::invalid_argument);
  EXPECT_THROW(generate_keys({GammaKeys{0.0, 1.0}, 1, 1}), std::invalid_argument);
  EXPECT_THROW(generate_keys({GammaKeys{1.0, -1.0}, 1, 1}), std::invalid_argument);
  EXPECT_THROW(generate_keys({UniformKeys{5, 1}, 1, 1}), std::invalid_argument);
  EXPECT_THROW(generate_keys({ShiftingGaussianKeys{0.5, 0.125, 1.0, {1, 1, 1}}, 4, 1}), std::invalid_argument);
}

// Sample mean of the last phase against the quantized target mean 1.5.
TEST(Workload, ShiftingGaussianFinalPhaseMean) {
  const std::size_t unit = 1u << 20;
  const ShiftingGaussianKeys sg{0.5, 0.125, 1.0, {4 * unit, 10 * unit, 4 * unit}};
  WorkloadSpec spec{sg, 18 * unit, 3};
  const auto keys = generate_keys(spec);
  ASSERT_EQ(keys.size(), 18 * unit);
  double sum = 0;
  for (std::size_t i = 14 * unit; i < keys.size(); ++i) sum += static_cast<double>(keys[i]);
  const double mean = sum / static_cast<double>(4 * unit);
  const double target = 1.5 * kDefaultDomainWidth;
  // Standard error of the mean is 0.125 * width / sqrt(4 * 2^20) = 6e-5 * width.
  EXPECT_NEAR(mean, target, 5e-4 * kDefaultDomainWidth);
  double first = 0;
  for (std::size_t i = 0; i < 4 * unit; ++i) first += static_cast<double>(keys[i]);
  EXPECT_NEAR(first / static_cast<double>(4 * unit), 0.5 * kDefaultDomainWidth, 5e-4 * kDefaultDomainWidth);
}

TEST(Workload, InterleaveStrictAlternationForEqualRates) {
  const std::vector<Key> a{1, 2, 3}, b{4, 5, 6};
  const auto t = interleave(a, b);
  ASSERT_EQ(t.size(), 6u);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t[i].stream, i % 2 == 0 ? StreamId::R : StreamId::S);
    EXPECT_EQ(t[i].seq, static_cast<Seq>(i / 2));
  }
}

TEST(Workload, InterleaveHonoursShare) {
  std::vector<Key> a(100000, 0), b(100000, 0);
  for (auto mode : {InterleaveMode::Weighted, InterleaveMode::Random}) {
    const auto t = interleave(a, b, 0.8, mode, 3);
    const auto rs = std::count_if(t.begin(), t.end(), [](const Tuple& x) { return x.stream == StreamId::R; });
    EXPECT_NEAR(static_cast<double>(rs) / static_cast<double>(t.size()), 0.8, 0.01);
  }
  EXPECT_THROW(interleave(a, b, 1.0), std::invalid_argument);
}

TEST(Calibration, WindowEqualToDomainGivesZeroDiff) {
  EXPECT_EQ(calibrate_diff(1024, 0, 1023, 1.0), 0);
}

TEST(Calibration, TargetEqualToWindowSpansDomain) {
  EXPECT_EQ(calibrate_diff(64, 10, 500, 64.0), 490);
  EXPECT_THROW(calibrate_diff(64, 0, 100, 65.0), std::invalid_argument);
}

// Smallest diff meeting the target, checked against a direct search over
// the expected-rate formula.
TEST(Calibration, SmallestDiffReachingTarget) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    const std::size_t w = 1 + rng() % 5000;
    const Key lo = static_cast<Key>(rng() % 1000);
    const Key hi = lo + static_cast<Key>(rng() % 100000);
    const double target = 0.1 + static_cast<double>(rng() % 1000) / 100.0;
    if (target >= static_cast<double>(w)) continue;
    const double domain = static_cast<double>(hi - lo + 1);
    Key want = 0;
    while (want < hi - lo && static_cast<double>(w) * (2.0 * static_cast<double>(want) + 1.0) / domain < target) ++want;
    EXPECT_EQ(calibrate_diff(w, lo, hi, target), want) << w << " " << lo << " " << hi << " " << target;
  }
}

// w = domain = 2^20 and target 2: the smallest diff is 1, whose expected
// rate is 3. Monte Carlo confirms the formula's expectation within 10%.
TEST(Calibration, MonteCarloMatchRate) {
  const std::size_t w = 1u << 20;
  const Key diff = calibrate_diff(w, 0, (1 << 20) - 1, 2.0);
  EXPECT_EQ(diff, 1);
  const auto window = generate_keys({UniformKeys{0, (1 << 20) - 1}, w, 1});
  const auto probes = generate_keys({UniformKeys{0, (1 << 20) - 1}, 20000, 2});
  const double expected = static_cast<double>(w) * 3.0 / static_cast<double>(1 << 20);
  EXPECT_NEAR(estimate_match_rate(window, probes, diff), expected, 0.1 * expected);
}

TEST(Calibration, DomainForTargetRate) {
  const std::size_t w = 1u << 14;
  const Key domain = calibrate_domain(w, 1, 2.0);
  EXPECT_EQ(domain, static_cast<Key>(w) * 3 / 2);
  const auto window = generate_keys({UniformKeys{0, domain - 1}, w, 5});
  const auto probes = generate_keys({UniformKeys{0, domain - 1}, 20000, 6});
  EXPECT_NEAR(estimate_match_rate(window, probes, 1), 2.0, 0.2);
}

TEST(Calibration, EmpiricalDiffIsSmallestReachingTarget) {
  const auto window = generate_keys({GammaKeys{3, 3}, 4096, 8});
  const auto probes = generate_keys({GammaKeys{3, 3}, 2000, 9});
  const Key d = calibrate_diff_empirical(window, probes, 2.0);
  EXPECT_GE(estimate_match_rate(window, probes, d), 2.0);
  if (d > 0) EXPECT_LT(estimate_match_rate(window, probes, d - 1), 2.0);
}

}  // namespace
}  // namespace pimtree
