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

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimtree/bench/instruments.hpp"
#include "pimtree/bench/key_values.hpp"
#include "pimtree/bench/run_config.hpp"
#include "pimtree/join/engine.hpp"

namespace pimtree::bench {

enum class ExperimentKind { Join, Skew, MergeTime };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Join: return "join";
    case ExperimentKind::Skew: return "skew";
    case ExperimentKind::MergeTime: return "merge_time";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  const auto t = normalize_token(s);
  if (t == "join") return ExperimentKind::Join;
  if (t == "skew") return ExperimentKind::Skew;
  if (t == "mergetime") return ExperimentKind::MergeTime;
  throw std::invalid_argument("unknown experiment kind: " + s);
}

struct Setting {
  std::string key;
  std::string value;
};

struct SweepPoint {
  std::string label;
  std::vector<Setting> settings;
};

struct Series {
  std::string label;
  std::vector<Setting> settings;
};

struct Experiment {
  std::string name;
  ExperimentKind kind = ExperimentKind::Join;
  RunConfig base;
  std::string sweep_param;
  std::vector<SweepPoint> points;
  std::vector<Series> series{Series{}};
  std::size_t reps = 3;

  /// Point `value` of the sweep: one setting of sweep_param.
  Experiment& sweep(std::string param, const std::vector<std::string>& values) {
    sweep_param = std::move(param);
    points.clear();
    for (const auto& v : values) points.push_back({v, {{sweep_param, v}}});
    return *this;
  }

  Experiment& with_series(std::string param, const std::vector<std::string>& values) {
    series.clear();
    for (const auto& v : values) series.push_back({v, {{param, v}}});
    return *this;
  }
};

/// Configuration of one (series, point) cell, with the thread cap applied.
inline RunConfig cell_config(const Experiment& ex, const Series& s, const SweepPoint& p);

inline void validate(const Experiment& ex) {
  if (ex.name.empty()) throw std::invalid_argument("experiment needs a name");
  if (ex.reps < 3) throw std::invalid_argument("experiment needs at least three repetitions");
  if (ex.points.empty()) throw std::invalid_argument("experiment needs at least one sweep value");
  if (ex.series.empty()) throw std::invalid_argument("experiment needs at least one series");
  if (ex.kind != ExperimentKind::Join) return;
  for (const auto& s : ex.series) {
    for (const auto& p : ex.points) {
      const RunConfig rc = cell_config(ex, s, p);
      rc.engine.validate();
      const std::size_t total = rc.total_tuples();
      const std::size_t warm = rc.warmup_tuples();
      if (warm >= total || total - warm < 4 * rc.w())
        throw std::invalid_argument(ex.name + ": measured tuples must be at least 4 * w at " + p.label);
    }
  }
}

struct Measurement {
  std::string experiment;
  std::string sweep_param;
  std::string sweep_value;
  std::size_t rep = 0;
  std::string seed_hash;
  double throughput_tps = 0;
  double p50_latency_s = 0;
  double p99_latency_s = 0;
  std::size_t merge_count = 0;
  std::string notes;
};

inline const char* csv_header() {
  return "experiment,sweep_param,sweep_value,rep,seed_hash,throughput_tps,p50_latency_s,p99_latency_s,merge_count,notes";
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string csv_row(const Measurement& m) {
  std::ostringstream o;
  o << std::setprecision(9);
  o << csv_field(m.experiment) << ',' << csv_field(m.sweep_param) << ',' << csv_field(m.sweep_value) << ',' << m.rep
    << ',' << m.seed_hash << ',' << m.throughput_tps << ',' << m.p50_latency_s << ',' << m.p99_latency_s << ','
    << m.merge_count << ',' << csv_field(m.notes);
  return o.str();
}

/// Upper bound on worker threads from BENCH_THREADS, if set.
inline std::optional<std::size_t> bench_threads_cap() {
  const char* v = std::getenv("BENCH_THREADS");
  if (!v || !*v) return std::nullopt;
  const double d = KeyValues::parse_number("BENCH_THREADS", v);
  if (d < 1) throw std::invalid_argument("BENCH_THREADS must be at least 1");
  return static_cast<std::size_t>(d);
}

inline void apply_thread_cap(RunConfig& rc) {
  if (auto cap = bench_threads_cap()) rc.engine.threads = std::min(rc.engine.threads, *cap);
}

inline RunConfig cell_config(const Experiment& ex, const Series& s, const SweepPoint& p) {
  RunConfig rc = ex.base;
  for (const auto& st : s.settings) apply(rc, st.key, st.value);
  for (const auto& st : p.settings) apply(rc, st.key, st.value);
  apply_thread_cap(rc);
  return rc;
}

/// Small copy of a configuration for correctness checks: w = 2^10, windows
/// scaled together, default run length.
inline RunConfig verification_twin(const RunConfig& rc, std::size_t w = 1u << 10) {
  RunConfig t = rc;
  const double scale = static_cast<double>(w) / static_cast<double>(rc.w());
  auto scaled = [&](std::size_t x) { return std::max<std::size_t>(1, static_cast<std::size_t>(x * scale + 0.5)); };
  t.engine.window_r = scaled(rc.engine.window_r);
  t.engine.window_s = scaled(rc.engine.window_s);
  t.tuples = 0;
  t.warmup = 0;
  t.engine.measure_from = 0;
  return t;
}

/// Every setting that shapes a run except the scale (windows, lengths,
/// seed), used to recognize already verified configurations.
inline std::string signature(const RunConfig& rc) {
  const EngineConfig& e = rc.engine;
  std::ostringstream o;
  o << to_string(e.index) << '|' << e.merge_ratio << '|' << e.insertion_depth << '|' << e.ib_fanout << '|'
    << e.chain_length << '|' << e.partitions << '|' << e.task_size << '|' << e.threads << '|'
    << to_string(e.merge_mode) << '|' << to_string(e.join_mode) << '|' << e.concurrency_control << '|'
    << static_cast<double>(e.window_r) / static_cast<double>(rc.w()) << '|'
    << static_cast<double>(e.window_s) / static_cast<double>(rc.w()) << '|' << rc.distribution << '|'
    << rc.target_match_rate << '|' << rc.stream_share << '|' << rc.mean << '|' << rc.stddev << '|' << rc.gamma_shape
    << '|' << rc.gamma_scale << '|' << rc.shift;
  return o.str();
}

/// Runs experiments and keeps track of configurations whose small twin has
/// passed verification in this session.
class Runner {
 public:
  explicit Runner(std::ostream* log = nullptr) : log_(log) {}

  /// Verification of the w = 2^10 twin; throws on mismatch.
  void verify_twin(const RunConfig& rc) {
    const std::string sig = signature(rc);
    if (verified_.count(sig)) return;
    const RunConfig twin = verification_twin(rc);
    const Workload wl = build_workload(twin);
    const VerifyReport rep = verify_against_oracle(twin.engine, wl.arrivals, wl.diff);
    if (!rep.pass) throw std::runtime_error("oracle mismatch on verification twin [" + sig + "]: " + rep.detail);
    if (log_) *log_ << "verified twin " << sig << " (" << rep.expected << " results)\n";
    verified_.insert(sig);
  }

  std::vector<Measurement> run(const Experiment& ex, const std::function<void(const Measurement&)>& on_row = {}) {
    validate(ex);
    std::vector<Measurement> rows;
    auto emit = [&](Measurement m) {
      if (on_row) on_row(m);
      rows.push_back(std::move(m));
    };
    for (const auto& s : ex.series) {
      const std::string name = s.label.empty() ? ex.name : ex.name + "/" + s.label;
      for (const auto& p : ex.points) {
        const RunConfig cell = cell_config(ex, s, p);
        if (ex.kind == ExperimentKind::Join) verify_twin(cell);
        for (std::size_t rep = 0; rep < ex.reps; ++rep) {
          RunConfig rc = cell;
          rc.seed = cell.seed + rep;
          Measurement m = measure(ex.kind, rc, p);
          m.experiment = name;
          m.sweep_param = ex.sweep_param;
          m.sweep_value = p.label;
          m.rep = rep;
          if (log_) *log_ << name << ' ' << ex.sweep_param << '=' << p.label << " rep " << rep << ": " << m.throughput_tps << " tps\n";
          emit(std::move(m));
        }
      }
    }
    return rows;
  }

 private:
  Measurement measure(ExperimentKind kind, RunConfig rc, const SweepPoint& p) {
    Measurement m;
    std::ostringstream notes;
    notes << std::setprecision(6);
    if (kind == ExperimentKind::Skew) {
      const SkewReport r = insert_skew(rc);
      m.seed_hash = hex(r.hash);
      m.throughput_tps = r.seconds > 0 ? static_cast<double>(rc.total_tuples()) / r.seconds : 0;
      m.merge_count = r.merges;
      notes << "top_share=" << r.top_share << ";max_over_mean=" << r.max_over_mean << ";subindexes=" << r.subindexes
            << ";phase2_inserts=" << r.phase2_inserts;
    } else if (kind == ExperimentKind::MergeTime) {
      const double n = KeyValues::parse_number("elements", p.label);
      const auto elements = static_cast<std::size_t>(n);
      const double secs = merge_time(elements, 9, rc.seed);
      m.seed_hash = hex(splitmix(rc.seed ^ elements));
      m.throughput_tps = static_cast<double>(elements + elements / 8) / secs;
      m.merge_count = 1;
      notes << "seconds=" << secs << ";merged_entries=" << elements + elements / 8;
    } else {
      const Workload wl = build_workload(rc);
      rc.engine.measure_from = rc.warmup_tuples();
      rc.engine.collect_results = false;
      const RunStats st = run_join(rc.engine, wl.arrivals, wl.diff);
      m.seed_hash = hex(wl.hash);
      m.throughput_tps = st.throughput_tps;
      m.p50_latency_s = st.p50_latency_s;
      m.p99_latency_s = st.p99_latency_s;
      m.merge_count = st.merges;
      notes << "tuples=" << st.tuples << ";diff=" << wl.diff << ";results=" << st.results
            << ";threads=" << rc.engine.threads;
      if (st.nonblocking_fallbacks) notes << ";fallbacks=" << st.nonblocking_fallbacks;
      if (st.admission_stalls) notes << ";stalls=" << st.admission_stalls;
      if (rc.w() <= (1u << 12) && wl.arrivals.size() <= 100000) {
        const VerifyReport v = verify_against_oracle(rc.engine, wl.arrivals, wl.diff);
        if (!v.pass) throw std::runtime_error("oracle mismatch: " + v.detail);
        notes << ";oracle=pass";
      }
      notes << ";twin=pass";
    }
    m.notes = notes.str();
    return m;
  }

  std::ostream* log_;
  std::set<std::string> verified_;
};

/// Names of the built-in experiments.
inline std::vector<std::string> experiment_names() {
  return {"chained",    "window_size",     "merge_ratio_im", "merge_ratio_pim", "merge_ratio_pim_mt",
          "insertion_depth", "threads",    "task_size",      "merge_mode",      "match_rate",
          "asym_rate",  "asym_window",     "distribution",   "cc_overhead",     "round_robin",
          "skew",       "skew_join",       "merge_time"};
}

inline std::vector<std::string> powers_of_two(int lo, int hi, int step = 1) {
  std::vector<std::string> out;
  for (int e = lo; e <= hi; e += step) out.push_back("2^" + std::to_string(e));
  return out;
}

inline Experiment named_experiment(const std::string& name) {
  Experiment ex;
  ex.name = name;
  RunConfig& b = ex.base;
  b.engine.set_window(1u << 16);
  b.engine.index = IndexKind::PimTree;
  auto parallel = [&](std::size_t threads) {
    b.engine.threads = threads;
    b.engine.concurrency_control = true;
  };

  if (name == "chained") {
    ex.with_series("index", {"chained-b", "chained-ib"}).sweep("chain_length", {"2", "4", "8", "16"});
  } else if (name == "window_size") {
    ex.with_series("index", {"btree", "chained-ib", "imtree", "pimtree", "roundrobin"})
        .sweep("window_size", powers_of_two(10, 18, 2));
  } else if (name == "merge_ratio_im") {
    b.engine.index = IndexKind::ImTree;
    ex.sweep("merge_ratio", powers_of_two(-6, 0));
  } else if (name == "merge_ratio_pim") {
    ex.sweep("merge_ratio", powers_of_two(-6, 0));
  } else if (name == "merge_ratio_pim_mt") {
    parallel(16);
    ex.sweep("merge_ratio", powers_of_two(-6, 0));
  } else if (name == "insertion_depth") {
    parallel(4);
    b.engine.merge_ratio = 1;
    ex.sweep("insertion_depth", {"1", "2", "3", "4"});
  } else if (name == "threads") {
    parallel(1);
    b.engine.merge_ratio = 1;
    ex.sweep("threads", {"1", "2", "4", "8", "16"});
  } else if (name == "task_size") {
    parallel(4);
    b.engine.merge_ratio = 1;
    ex.sweep("task_size", {"1", "2", "4", "8", "16", "32", "64"});
  } else if (name == "merge_mode") {
    parallel(1);
    b.engine.merge_ratio = 1;
    ex.with_series("merge_mode", {"blocking", "nonblocking"}).sweep("threads", {"1", "4", "8"});
  } else if (name == "match_rate") {
    parallel(4);
    b.engine.merge_ratio = 1;
    ex.sweep("target_match_rate", {"1", "2", "4", "8", "16", "32"});
  } else if (name == "asym_rate") {
    parallel(4);
    b.engine.merge_ratio = 1;
    ex.sweep("stream_share", {"0.5", "0.6", "0.7", "0.8", "0.9"});
  } else if (name == "asym_window") {
    parallel(4);
    b.engine.merge_ratio = 1;
    ex.sweep("window_r", powers_of_two(14, 18));
  } else if (name == "distribution") {
    parallel(4);
    b.engine.merge_ratio = 1;
    ex.sweep_param = "distribution";
    ex.points = {{"uniform", {{"distribution", "uniform"}}},
                 {"gaussian", {{"distribution", "gaussian"}}},
                 {"gamma_3_3", {{"distribution", "gamma"}, {"gamma_shape", "3"}, {"gamma_scale", "3"}}},
                 {"gamma_1_5", {{"distribution", "gamma"}, {"gamma_shape", "1"}, {"gamma_scale", "5"}}}};
  } else if (name == "cc_overhead") {
    ex.with_series("index", {"btree", "pimtree"}).sweep("concurrency_control", {"0", "1"});
  } else if (name == "round_robin") {
    parallel(1);
    b.engine.index = IndexKind::RoundRobin;
    ex.sweep("threads", {"1", "2", "4", "8"});
  } else if (name == "skew") {
    ex.kind = ExperimentKind::Skew;
    b.engine.merge_ratio = 1;
    b.engine.join_mode = JoinMode::SelfJoin;
    b.distribution = "shifting_gaussian";
    ex.sweep("shift", {"0", "0.2", "0.4", "0.6", "0.8", "1"});
  } else if (name == "skew_join") {
    parallel(4);
    b.engine.merge_ratio = 1;
    b.engine.join_mode = JoinMode::SelfJoin;
    b.distribution = "shifting_gaussian";
    b.warmup = 4u << 16;
    ex.sweep("shift", {"0", "0.2", "0.4", "0.6", "0.8", "1"});
  } else if (name == "merge_time") {
    ex.kind = ExperimentKind::MergeTime;
    ex.sweep_param = "elements";
    for (const auto& v : powers_of_two(12, 18)) ex.points.push_back({v, {}});
  } else {
    throw std::invalid_argument("unknown experiment: " + name);
  }
  return ex;
}

/// Experiment file: `base` names a built-in experiment to start from,
/// `experiment`, `kind`, `sweep`, `values`, `series_param`, `series_values`
/// and `reps` describe the sweep, and all other keys set the base run
/// configuration.
inline Experiment experiment_from(const KeyValues& kv) {
  Experiment ex;
  if (auto b = kv.get("base")) ex = named_experiment(*b);
  if (auto n = kv.get("experiment")) ex.name = *n;
  if (auto k = kv.get("kind")) ex.kind = parse_experiment_kind(*k);
  if (auto r = kv.get_size("reps")) ex.reps = *r;
  const std::vector<std::string> reserved = {"base",   "experiment",   "kind",         "sweep",
                                             "values", "series_param", "series_values", "reps"};
  if (auto w = kv.all().find("window_size"); w != kv.all().end()) apply(ex.base, w->first, w->second);
  for (const auto& [k, v] : kv.all()) {
    if (k == "window_size" || std::find(reserved.begin(), reserved.end(), k) != reserved.end()) continue;
    apply(ex.base, k, v);
  }
  auto sweep = kv.get("sweep");
  auto values = kv.get("values");
  if (sweep || values) {
    if (!sweep || !values) throw std::invalid_argument("experiment file needs both sweep and values");
    const auto list = KeyValues::split_list(*values);
    if (ex.kind == ExperimentKind::MergeTime) {
      ex.sweep_param = *sweep;
      ex.points.clear();
      for (const auto& v : list) ex.points.push_back({v, {}});
    } else {
      ex.sweep(*sweep, list);
    }
  }
  auto sp = kv.get("series_param");
  auto sv = kv.get("series_values");
  if (sp || sv) {
    if (!sp || !sv) throw std::invalid_argument("experiment file needs both series_param and series_values");
    ex.with_series(*sp, KeyValues::split_list(*sv));
  }
  return ex;
}

/// A built-in experiment name or the path of an experiment file.
inline Experiment load_experiment(const std::string& name_or_path) {
  if (std::filesystem::is_regular_file(name_or_path)) return experiment_from(KeyValues::load(name_or_path));
  return named_experiment(name_or_path);
}

/// Median throughput per sweep value, in sweep order, for one series.
inline std::vector<double> median_throughput(const std::vector<Measurement>& rows, const std::string& experiment,
                                             const std::vector<std::string>& values) {
  std::vector<double> out;
  for (const auto& v : values) {
    std::vector<double> t;
    for (const auto& r : rows)
      if (r.experiment == experiment && r.sweep_value == v) t.push_back(r.throughput_tps);
    out.push_back(percentile(t, 0.5));
  }
  return out;
}

}  // namespace pimtree::bench
