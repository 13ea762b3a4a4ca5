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
#include <cctype>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pimtree::cost {

enum class Model { Generic, BTreeJoin, ChainedJoin, RoundRobinJoin, ImTreeJoin, PimTreeJoin };

inline std::string to_string(Model m) {
  switch (m) {
    case Model::Generic: return "Generic";
    case Model::BTreeJoin: return "BTreeJoin";
    case Model::ChainedJoin: return "ChainedJoin";
    case Model::RoundRobinJoin: return "RoundRobinJoin";
    case Model::ImTreeJoin: return "ImTreeJoin";
    case Model::PimTreeJoin: return "PimTreeJoin";
  }
  return "?";
}

inline Model parse_model(std::string_view s) {
  std::string t;
  for (char c : s)
    if (c != '_' && c != '-') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "generic") return Model::Generic;
  if (t == "btreejoin" || t == "btree") return Model::BTreeJoin;
  if (t == "chainedjoin" || t == "chained") return Model::ChainedJoin;
  if (t == "roundrobinjoin" || t == "roundrobin" || t == "rr") return Model::RoundRobinJoin;
  if (t == "imtreejoin" || t == "imtree") return Model::ImTreeJoin;
  if (t == "pimtreejoin" || t == "pimtree") return Model::PimTreeJoin;
  throw std::invalid_argument("unknown cost model: " + std::string(s));
}

/// Symbols of the per-tuple cost equations. Heights left empty are derived
/// from w and the fan-outs.
struct CostParams {
  double w = 1 << 20;
  double tau_c = 1.0;
  std::optional<double> sigma;    // selectivity
  std::optional<double> sigma_s;  // match rate, w * sigma
  double f_b = 32;
  double f_ib = 32;
  double lambda_b_s = 1.0;
  double lambda_b_i = 1.0;
  double lambda_b_d = 1.0;
  double lambda_ib_s = 1.0;
  double m = 0.125;
  std::optional<double> L;
  std::optional<double> P;
  double D_I = 4;
  std::optional<double> M;
  std::optional<double> M_prime;
  // Generic decomposition
  std::optional<double> C_S, C_D, C_I;
  // Height overrides
  std::optional<double> H_b, H_c, H_p, H_S, H_I, H_I_prime;
};

struct Breakdown {
  double step1 = 0;
  double step2 = 0;
  double step3 = 0;
  double total = 0;
};

namespace detail {
inline double log_base(double b, double x) { return std::log(x) / std::log(b); }
inline double require(const std::optional<double>& v, const char* name) {
  if (!v) throw std::invalid_argument(std::string("missing cost parameter: ") + name);
  return *v;
}
}  // namespace detail

inline double match_rate(const CostParams& p) {
  if (p.sigma_s) {
    if (p.sigma && std::abs(*p.sigma_s - p.w * *p.sigma) > 1e-9 * std::max(1.0, *p.sigma_s))
      throw std::invalid_argument("sigma_s must equal w * sigma");
    return *p.sigma_s;
  }
  if (p.sigma) return p.w * *p.sigma;
  throw std::invalid_argument("missing cost parameter: sigma_s or sigma");
}

inline double height_b(const CostParams& p) { return p.H_b ? *p.H_b : detail::log_base(p.f_b, p.w); }
inline double height_c(const CostParams& p) {
  return p.H_c ? *p.H_c : height_b(p) - detail::log_base(p.f_b, detail::require(p.L, "L"));
}
inline double height_p(const CostParams& p) {
  return p.H_p ? *p.H_p : height_b(p) - detail::log_base(p.f_b, detail::require(p.P, "P"));
}
inline double height_s(const CostParams& p) {
  return p.H_S ? *p.H_S : std::max(1.0, detail::log_base(p.f_ib, p.w));
}
/// T_I holds m * w / 2 entries on average between merges.
inline double height_i(const CostParams& p) {
  return p.H_I ? *p.H_I : std::max(1.0, detail::log_base(p.f_b, p.m * p.w / 2));
}
/// Average subindex height: T_I is spread over f_ib^D_I subindexes.
inline double height_i_prime(const CostParams& p) {
  if (p.H_I_prime) return *p.H_I_prime;
  return std::max(1.0, detail::log_base(p.f_b, p.m * p.w / 2 / std::pow(p.f_ib, p.D_I)));
}

inline void validate(const CostParams& p) {
  if (!(p.w > 0)) throw std::invalid_argument("w must be positive");
  if (!(p.m > 0 && p.m <= 1)) throw std::invalid_argument("m must lie in (0, 1]");
  if (p.L && *p.L < 2) throw std::invalid_argument("L must be at least 2");
  if (p.P && *p.P < 1) throw std::invalid_argument("P must be at least 1");
  for (double v : {p.tau_c, p.lambda_b_s, p.lambda_b_i, p.lambda_b_d, p.lambda_ib_s})
    if (v < 0) throw std::invalid_argument("costs must be non-negative");
}

inline Breakdown evaluate(Model model, const CostParams& p) {
  validate(p);
  Breakdown b;
  switch (model) {
    case Model::Generic:
      b.step1 = detail::require(p.C_S, "C_S");
      b.step2 = detail::require(p.C_D, "C_D");
      b.step3 = detail::require(p.C_I, "C_I");
      break;
    case Model::BTreeJoin: {
      const double h = height_b(p);
      b.step1 = h * p.lambda_b_s + match_rate(p) * p.tau_c;
      b.step2 = h * p.lambda_b_d;
      b.step3 = h * p.lambda_b_i;
      break;
    }
    case Model::ChainedJoin: {
      const double l = detail::require(p.L, "L");
      const double h = height_c(p);
      b.step1 = l * h * p.lambda_b_s + match_rate(p) * p.tau_c * (1 + 1 / (2 * (l - 1)));
      b.step2 = 0;
      b.step3 = h * p.lambda_b_i;
      break;
    }
    case Model::RoundRobinJoin: {
      const double pp = detail::require(p.P, "P");
      const double h = height_p(p);
      b.step1 = pp * h * p.lambda_b_s + match_rate(p) * p.tau_c;
      b.step2 = h * p.lambda_b_d;
      b.step3 = h * p.lambda_b_i;
      break;
    }
    case Model::ImTreeJoin: {
      const double hi = height_i(p);
      b.step1 = height_s(p) * p.lambda_ib_s + hi * p.lambda_b_s + match_rate(p) * p.tau_c * (1 + p.m / 2);
      b.step2 = detail::require(p.M, "M") / (p.m * p.w);
      b.step3 = hi * p.lambda_b_i;
      break;
    }
    case Model::PimTreeJoin: {
      const double hi = height_i_prime(p);
      b.step1 = height_s(p) * p.lambda_ib_s + hi * p.lambda_b_s + match_rate(p) * p.tau_c * (1 + p.m / 2);
      b.step2 = detail::require(p.M_prime, "M_prime") / (p.m * p.w);
      b.step3 = p.D_I * p.lambda_ib_s + hi * p.lambda_b_i;
      break;
    }
  }
  b.total = b.step1 + b.step2 + b.step3;
  return b;
}

enum class SweepParam { W, L, P, M, SigmaS, DI };

inline SweepParam parse_sweep_param(std::string_view s) {
  if (s == "w") return SweepParam::W;
  if (s == "L") return SweepParam::L;
  if (s == "P") return SweepParam::P;
  if (s == "m") return SweepParam::M;
  if (s == "sigma_s") return SweepParam::SigmaS;
  if (s == "D_I") return SweepParam::DI;
  throw std::invalid_argument("unknown sweep parameter: " + std::string(s));
}

inline void set_param(CostParams& p, SweepParam which, double v) {
  switch (which) {
    case SweepParam::W: p.w = v; break;
    case SweepParam::L: p.L = v; break;
    case SweepParam::P: p.P = v; break;
    case SweepParam::M: p.m = v; break;
    case SweepParam::SigmaS:
      p.sigma_s = v;
      p.sigma.reset();
      break;
    case SweepParam::DI: p.D_I = v; break;
  }
}

struct CrossoverRow {
  double value = 0;
  Breakdown a;
  Breakdown b;
};

/// Evaluates both models at every value of the swept parameter.
inline std::vector<CrossoverRow> crossover(Model a, Model b, SweepParam which, const std::vector<double>& values,
                                           CostParams params) {
  std::vector<CrossoverRow> rows;
  rows.reserve(values.size());
  for (double v : values) {
    set_param(params, which, v);
    rows.push_back({v, evaluate(a, params), evaluate(b, params)});
  }
  return rows;
}

}  // namespace pimtree::cost
