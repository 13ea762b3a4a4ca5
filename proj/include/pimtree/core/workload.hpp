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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include "pimtree/core/types.hpp"

namespace pimtree {

struct UniformKeys {
  Key lo = 0;
  Key hi = 0;
};

struct GaussianKeys {
  double mean = 0.5;
  double stddev = 0.125;
};

struct GammaKeys {
  double shape = 3.0;
  double scale = 3.0;
};

/// Three phases: fixed N(mean0, stddev), a linear drift of the mean to
/// mean0 + shift, then fixed N(mean0 + shift, stddev).
struct ShiftingGaussianKeys {
  double mean0 = 0.5;
  double stddev = 0.125;
  double shift = 0.0;
  std::array<std::size_t, 3> phase_lengths{};
};

using KeyDistribution = std::variant<UniformKeys, GaussianKeys, GammaKeys, ShiftingGaussianKeys>;

inline constexpr double kDefaultDomainWidth = 4194304.0;  // 2^22

struct WorkloadSpec {
  KeyDistribution distribution = UniformKeys{0, 1023};
  std::size_t count = 0;
  std::uint64_t seed = 1;
  double target_match_rate = 2.0;
  /// Scale applied to continuous draws before rounding to integer keys.
  double domain_width = kDefaultDomainWidth;
};

namespace detail {

inline Key quantize(double x, double width) { return static_cast<Key>(std::llround(x * width)); }

inline void validate(const WorkloadSpec& spec) {
  if (!(spec.target_match_rate > 0)) throw std::invalid_argument("target match rate must be positive");
  if (!(spec.domain_width > 0)) throw std::invalid_argument("domain width must be positive");
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformKeys>) {
          if (d.lo > d.hi) throw std::invalid_argument("uniform: lo > hi");
        } else if constexpr (std::is_same_v<D, GaussianKeys>) {
          if (!(d.stddev > 0)) throw std::invalid_argument("gaussian: stddev must be positive");
        } else if constexpr (std::is_same_v<D, GammaKeys>) {
          if (!(d.shape > 0) || !(d.scale > 0))
            throw std::invalid_argument("gamma: shape and scale must be positive");
        } else {
          if (!(d.stddev > 0)) throw std::invalid_argument("shifting gaussian: stddev must be positive");
          const auto total = d.phase_lengths[0] + d.phase_lengths[1] + d.phase_lengths[2];
          if (total != spec.count)
            throw std::invalid_argument("shifting gaussian: phase lengths must sum to count");
        }
      },
      spec.distribution);
}

}  // namespace detail

/// Join keys for one stream. Deterministic in (spec, seed).
inline std::vector<Key> generate_keys(const WorkloadSpec& spec) {
  detail::validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::vector<Key> keys;
  keys.reserve(spec.count);
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformKeys>) {
          std::uniform_int_distribution<Key> dist(d.lo, d.hi);
          for (std::size_t i = 0; i < spec.count; ++i) keys.push_back(dist(rng));
        } else if constexpr (std::is_same_v<D, GaussianKeys>) {
          std::normal_distribution<double> dist(d.mean, d.stddev);
          for (std::size_t i = 0; i < spec.count; ++i)
            keys.push_back(detail::quantize(dist(rng), spec.domain_width));
        } else if constexpr (std::is_same_v<D, GammaKeys>) {
          std::gamma_distribution<double> dist(d.shape, d.scale);
          for (std::size_t i = 0; i < spec.count; ++i)
            keys.push_back(detail::quantize(dist(rng), spec.domain_width));
        } else {
          std::normal_distribution<double> unit(0.0, 1.0);
          const auto [p1, p2, p3] = d.phase_lengths;
          for (std::size_t i = 0; i < p1; ++i)
            keys.push_back(detail::quantize(d.mean0 + d.stddev * unit(rng), spec.domain_width));
          for (std::size_t i = 0; i < p2; ++i) {
            const double mean = d.mean0 + d.shift * static_cast<double>(i) / static_cast<double>(p2);
            keys.push_back(detail::quantize(mean + d.stddev * unit(rng), spec.domain_width));
          }
          for (std::size_t i = 0; i < p3; ++i)
            keys.push_back(
                detail::quantize(d.mean0 + d.shift + d.stddev * unit(rng), spec.domain_width));
        }
      },
      spec.distribution);
  return keys;
}

/// Tuples of one stream with contiguous sequence numbers.
inline std::vector<Tuple> generate_stream(const WorkloadSpec& spec, StreamId stream = StreamId::R) {
  const auto keys = generate_keys(spec);
  std::vector<Tuple> out;
  out.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out.push_back({stream, static_cast<Seq>(i), keys[i]});
  }
  return out;
}

enum class InterleaveMode {
  Weighted,  // deterministic weighted round robin (strict alternation for equal rates)
  Random,    // Bernoulli choice per arrival
};

/// Merges two key sequences into one arrival order. `share_r` is the fraction
/// of arrivals taken from R. Arrival stops when the side due next runs dry.
inline std::vector<Tuple> interleave(std::span<const Key> r, std::span<const Key> s, double share_r = 0.5,
                                     InterleaveMode mode = InterleaveMode::Weighted,
                                     std::uint64_t seed = 7) {
  if (!(share_r > 0 && share_r < 1)) throw std::invalid_argument("share_r must lie in (0, 1)");
  std::vector<Tuple> out;
  out.reserve(r.size() + s.size());
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(share_r);
  std::size_t i = 0, j = 0;
  double credit = 0.0;
  for (;;) {
    bool take_r;
    if (mode == InterleaveMode::Random) {
      take_r = coin(rng);
    } else {
      credit += share_r;
      take_r = credit >= 0.5;
      if (take_r) credit -= 1.0;
    }
    if (take_r ? i == r.size() : j == s.size()) break;
    if (take_r) {
      out.push_back({StreamId::R, static_cast<Seq>(i), r[i]});
      ++i;
    } else {
      out.push_back({StreamId::S, static_cast<Seq>(j), s[j]});
      ++j;
    }
  }
  return out;
}

/// Smallest diff with w * (2 * diff + 1) / |domain| >= target, assuming
/// uniform keys over [lo, hi]. A target equal to w makes every pair match.
inline Key calibrate_diff(std::size_t w, Key lo, Key hi, double target) {
  if (lo > hi) throw std::invalid_argument("calibrate_diff: empty key domain");
  if (!(target > 0)) throw std::invalid_argument("calibrate_diff: target must be positive");
  if (target > static_cast<double>(w)) throw std::invalid_argument("calibrate_diff: target exceeds window size");
  const long double domain = static_cast<long double>(hi) - static_cast<long double>(lo) + 1.0L;
  if (target >= static_cast<double>(w)) return hi - lo;
  const long double need = (static_cast<long double>(target) * domain / static_cast<long double>(w) - 1.0L) / 2.0L;
  Key diff = need <= 0 ? 0 : static_cast<Key>(std::ceil(need - 1e-12L));
  // guard against rounding at exact boundaries
  while (diff > 0 && static_cast<long double>(w) * (2.0L * (diff - 1) + 1.0L) / domain >= target) --diff;
  while (static_cast<long double>(w) * (2.0L * diff + 1.0L) / domain < target) ++diff;
  return std::min<Key>(diff, hi - lo);
}

/// Uniform domain width that makes `diff` produce exactly `target` expected
/// matches per probe over a window of w tuples.
inline Key calibrate_domain(std::size_t w, Key diff, double target) {
  if (!(target > 0)) throw std::invalid_argument("calibrate_domain: target must be positive");
  const double width = static_cast<double>(w) * (2.0 * static_cast<double>(diff) + 1.0) / target;
  return std::max<Key>(1, static_cast<Key>(std::llround(width)));
}

/// Average number of window keys within `diff` of a probe key, estimated by
/// sampling probes against a sorted window sample.
inline double estimate_match_rate(std::span<const Key> window_keys, std::span<const Key> probes, Key diff) {
  if (probes.empty()) return 0.0;
  std::vector<Key> sorted(window_keys.begin(), window_keys.end());
  std::sort(sorted.begin(), sorted.end());
  const BandPredicate pred(diff);
  std::size_t total = 0;
  for (Key p : probes) {
    const auto r = pred.probe_range(p);
    total += static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), r.hi) -
                                      std::lower_bound(sorted.begin(), sorted.end(), r.lo));
  }
  return static_cast<double>(total) / static_cast<double>(probes.size());
}

/// Empirical calibration for skewed distributions: the smallest diff whose
/// sampled match rate reaches `target`. `window_keys` should hold w keys.
inline Key calibrate_diff_empirical(std::span<const Key> window_keys, std::span<const Key> probes,
                                    double target) {
  if (window_keys.empty()) throw std::invalid_argument("calibrate_diff_empirical: empty sample");
  const auto [mn, mx] = std::minmax_element(window_keys.begin(), window_keys.end());
  Key lo = 0, hi = *mx - *mn;
  if (estimate_match_rate(window_keys, probes, hi) < target) return hi;
  while (lo < hi) {
    const Key mid = lo + (hi - lo) / 2;
    if (estimate_match_rate(window_keys, probes, mid) >= target) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

}  // namespace pimtree
