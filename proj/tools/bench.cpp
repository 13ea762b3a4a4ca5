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


#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "pimtree/bench/cost_io.hpp"
#include "pimtree/bench/experiments.hpp"
#include "pimtree/bench/instruments.hpp"
#include "pimtree/join/engine.hpp"

namespace {

using namespace pimtree;
using namespace pimtree::bench;

int cmd_run(const std::string& experiment, const std::string& out_path, std::size_t reps, bool quiet) {
  Experiment ex = load_experiment(experiment);
  if (reps) ex.reps = reps;
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    out = &file;
  }
  *out << csv_header() << '\n';
  Runner runner(quiet ? nullptr : &std::cerr);
  runner.run(ex, [&](const Measurement& m) { *out << csv_row(m) << '\n' << std::flush; });
  return 0;
}

int cmd_verify(const std::string& path, std::size_t seeds) {
  RunConfig rc = run_config_from(KeyValues::load(path));
  apply_thread_cap(rc);
  if (rc.w() > (1u << 12)) throw std::invalid_argument("verify needs window_size <= 4096");
  if (rc.total_tuples() > 100000) throw std::invalid_argument("verify needs at most 100000 tuples");
  int failures = 0;
  for (std::size_t i = 0; i < seeds; ++i) {
    RunConfig cfg = rc;
    cfg.seed = rc.seed + i;
    const Workload wl = build_workload(cfg);
    const VerifyReport rep = verify_against_oracle(cfg.engine, wl.arrivals, wl.diff);
    std::cout << (rep.pass ? "PASS" : "FAIL") << " seed=" << cfg.seed << " hash=" << hex(wl.hash)
              << " diff=" << wl.diff << " expected=" << rep.expected << " actual=" << rep.actual;
    if (!rep.pass) std::cout << " first divergence: " << rep.detail;
    std::cout << '\n';
    failures += rep.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

int cmd_cost(const std::string& model_name, const std::string& params_path, std::string sweep, std::string values,
             std::size_t calibrate_w, const std::string& out_path) {
  const KeyValues kv = KeyValues::load(params_path);
  cost::CostParams p = cost_params_from(kv);
  if (calibrate_w) {
    const cost::CostParams c = calibrate_lambdas(calibrate_w);
    p.lambda_b_s = c.lambda_b_s;
    p.lambda_b_i = c.lambda_b_i;
    p.lambda_b_d = c.lambda_b_d;
    p.lambda_ib_s = c.lambda_ib_s;
    p.tau_c = c.tau_c;
    // Merge time grows linearly with the entry count; scale it to w.
    p.M = p.M_prime = merge_time(calibrate_w, 5) / static_cast<double>(calibrate_w) * p.w;
    std::cerr << "calibrated: lambda_b_s=" << p.lambda_b_s << " lambda_b_i=" << p.lambda_b_i
              << " lambda_b_d=" << p.lambda_b_d << " lambda_ib_s=" << p.lambda_ib_s << " tau_c=" << p.tau_c << " M=" << *p.M << '\n';
  }
  std::string name = model_name;
  if (name.empty()) name = kv.get("model").value_or("all");
  if (sweep.empty()) sweep = kv.get("sweep").value_or("");
  if (values.empty()) values = kv.get("values").value_or("");

  std::vector<cost::Model> models;
  if (normalize_token(name) == "all") {
    models = {cost::Model::BTreeJoin, cost::Model::ChainedJoin, cost::Model::RoundRobinJoin, cost::Model::ImTreeJoin,
              cost::Model::PimTreeJoin};
  } else {
    for (const auto& n : KeyValues::split_list(name)) models.push_back(cost::parse_model(n));
  }

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    out = &file;
  }
  *out << cost_csv_header() << '\n';
  if (sweep.empty()) {
    for (auto m : models) *out << cost_csv_row(m, "base", cost::evaluate(m, p)) << '\n';
    return 0;
  }
  if (values.empty()) throw std::invalid_argument("--sweep needs --values");
  const auto which = cost::parse_sweep_param(sweep);
  for (auto m : models) {
    for (const auto& v : KeyValues::split_list(values)) {
      cost::CostParams q = p;
      cost::set_param(q, which, KeyValues::parse_number(sweep, v));
      *out << cost_csv_row(m, sweep + "=" + v, cost::evaluate(m, q)) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Window join benchmark harness"};
  app.require_subcommand(1);

  std::string experiment, out_path;
  std::size_t reps = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a named experiment or an experiment file and write CSV rows");
  run->add_option("--experiment,-e", experiment, "Experiment name or key=value file")->required();
  run->add_option("--out,-o", out_path, "CSV output path ('-' for stdout)")->default_val("-");
  run->add_option("--reps", reps, "Override the repetition count (at least 3)");
  run->add_flag("--quiet,-q", quiet, "No progress output");

  std::string config;
  std::size_t seeds = 1;
  auto* verify = app.add_subcommand("verify", "Compare an engine configuration with the nested-loop oracle");
  verify->add_option("--config,-c", config, "key=value configuration file")->required();
  verify->add_option("--seeds", seeds, "Number of consecutive seeds to check")->default_val(1);

  std::string model, params, sweep, values, cost_out;
  std::size_t calibrate = 0;
  auto* cost = app.add_subcommand("cost", "Evaluate the analytical cost models");
  cost->add_option("--model,-m", model, "Model name, comma list or 'all'");
  cost->add_option("--params,-p", params, "key=value parameter file")->required();
  cost->add_option("--sweep", sweep, "Parameter to sweep: w, L, P, m, sigma_s, D_I");
  cost->add_option("--values", values, "Comma-separated sweep values (2^k allowed)");
  cost->add_option("--calibrate", calibrate, "Replace lambda, tau_c and M with values measured on trees of this size");
  cost->add_option("--out,-o", cost_out, "CSV output path ('-' for stdout)")->default_val("-");

  auto* list = app.add_subcommand("list", "List the built-in experiments");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(experiment, out_path, reps, quiet);
    if (*verify) return cmd_verify(config, seeds);
    if (*cost) return cmd_cost(model, params, sweep, values, calibrate, cost_out);
    if (*list) {
      for (const auto& n : experiment_names()) std::cout << n << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
