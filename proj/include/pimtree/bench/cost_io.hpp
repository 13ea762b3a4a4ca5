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
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pimtree/bench/key_values.hpp"
#include "pimtree/cost_model.hpp"

namespace pimtree::bench {

/// Cost parameters from key=value text. Keys are the CostParams field
/// names; `model`, `sweep`, `values` and `compare` are left to the caller.
inline cost::CostParams cost_params_from(const KeyValues& kv, cost::CostParams p = {}) {
  std::map<std::string, double*> plain = {
      {"w", &p.w},           {"tau_c", &p.tau_c},           {"f_b", &p.f_b},
      {"f_ib", &p.f_ib},     {"lambda_b_s", &p.lambda_b_s}, {"lambda_b_i", &p.lambda_b_i},
      {"lambda_b_d", &p.lambda_b_d}, {"lambda_ib_s", &p.lambda_ib_s}, {"m", &p.m},
      {"D_I", &p.D_I}};
  std::map<std::string, std::optional<double>*> opt = {
      {"sigma", &p.sigma}, {"sigma_s", &p.sigma_s}, {"L", &p.L},     {"P", &p.P},
      {"M", &p.M},         {"M_prime", &p.M_prime}, {"C_S", &p.C_S}, {"C_D", &p.C_D},
      {"C_I", &p.C_I},     {"H_b", &p.H_b},         {"H_c", &p.H_c}, {"H_p", &p.H_p},
      {"H_S", &p.H_S},     {"H_I", &p.H_I},         {"H_I_prime", &p.H_I_prime}};
  const std::vector<std::string> reserved = {"model", "sweep", "values", "compare", "calibrate"};
  for (const auto& [k, v] : kv.all()) {
    if (std::find(reserved.begin(), reserved.end(), k) != reserved.end()) continue;
    const double x = KeyValues::parse_number(k, v);
    if (auto it = plain.find(k); it != plain.end()) {
      *it->second = x;
    } else if (auto jt = opt.find(k); jt != opt.end()) {
      *jt->second = x;
    } else {
      throw std::invalid_argument("unknown cost parameter: " + k);
    }
  }
  return p;
}

inline const char* cost_csv_header() { return "model,parameter,step1,step2,step3,total"; }

inline std::string cost_csv_row(cost::Model m, const std::string& parameter, const cost::Breakdown& b) {
  std::ostringstream o;
  o.precision(9);
  o << cost::to_string(m) << ',' << parameter << ',' << b.step1 << ',' << b.step2 << ',' << b.step3 << ',' << b.total;
  return o.str();
}

}  // namespace pimtree::bench
