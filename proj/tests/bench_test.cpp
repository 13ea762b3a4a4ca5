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

#include <cstdlib>
#include <set>
#include <sstream>

#include "pimtree/bench/cost_io.hpp"
#include "pimtree/bench/experiments.hpp"

namespace pimtree::bench {
namespace {

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    if (value) ::setenv(name, value, 1);
    else ::unsetenv(name);
  }
  ~ScopedEnv() {
    if (old_) ::setenv(name_, old_->c_str(), 1);
    else ::unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

TEST(KeyValues, ParsesCommentsAndOverrides) {
  const auto kv = KeyValues::parse("# header\n a = 1 \n\nb=2^4 # trailing\na=3\n");
  EXPECT_EQ(kv.get("a"), "3");
  EXPECT_EQ(kv.get_double("b"), 16.0);
  EXPECT_EQ(kv.get("c"), std::nullopt);
  EXPECT_THROW(KeyValues::parse("novalue\n"), std::invalid_argument);
  EXPECT_THROW(KeyValues::parse("=5\n"), std::invalid_argument);
}

TEST(KeyValues, TypedAccessors) {
  const auto kv = KeyValues::parse("n=12\nf=1.5\nt=yes\nx=abc\nneg=-1\n");
  EXPECT_EQ(kv.get_size("n"), 12u);
  EXPECT_THROW(kv.get_size("f"), std::invalid_argument);
  EXPECT_THROW(kv.get_size("neg"), std::invalid_argument);
  EXPECT_EQ(kv.get_bool("t"), true);
  EXPECT_THROW(kv.get_bool("x"), std::invalid_argument);
  EXPECT_THROW(kv.get_double("x"), std::invalid_argument);
  const auto unused = kv.unused();
  EXPECT_TRUE(unused.empty());
}

TEST(KeyValues, SplitsLists) {
  EXPECT_EQ(KeyValues::split_list(" 1, 2 ,,3 "), (std::vector<std::string>{"1", "2", "3"}));
}

TEST(RunConfig, AppliesKeys) {
  const auto kv = KeyValues::parse(
      "window_size=2^10\nwindow_s=256\nmerge_ratio=0.5\ninsertion_depth=2\ntask_size=4\nthreads=3\n"
      "index=chained-ib\nchain_length=3\njoin_mode=twoway\nmerge_mode=blocking\ndistribution=gamma\n"
      "diff=7\nseed=9\ntuples=5000\nconcurrency_control=true\n");
  const RunConfig rc = run_config_from(kv);
  EXPECT_EQ(rc.engine.window_r, 1024u);
  EXPECT_EQ(rc.engine.window_s, 256u);
  EXPECT_EQ(rc.engine.merge_ratio, 0.5);
  EXPECT_EQ(rc.engine.insertion_depth, 2u);
  EXPECT_EQ(rc.engine.index, IndexKind::ChainedIB);
  EXPECT_EQ(rc.engine.chain_length, 3u);
  EXPECT_TRUE(rc.engine.concurrency_control);
  EXPECT_EQ(rc.distribution, "gamma");
  EXPECT_EQ(rc.diff, 7);
  EXPECT_EQ(rc.seed, 9u);
  EXPECT_EQ(rc.total_tuples(), 5000u);
}

TEST(RunConfig, RejectsUnknownKeysAndValues) {
  RunConfig rc;
  EXPECT_THROW(apply(rc, "colour", "red"), std::invalid_argument);
  EXPECT_THROW(apply(rc, "index", "bwtree"), std::invalid_argument);
  EXPECT_THROW(apply(rc, "threads", "1.5"), std::invalid_argument);
  EXPECT_THROW(apply(rc, "phases", "1,2"), std::invalid_argument);
  EXPECT_THROW(apply(rc, "distribution", "zipf"), std::invalid_argument);
}

TEST(RunConfig, DefaultLengths) {
  RunConfig rc;
  rc.engine.set_window(100);
  EXPECT_EQ(rc.warmup_tuples(), 200u);
  EXPECT_EQ(rc.total_tuples(), 1000u);
  rc.distribution = "shifting_gaussian";
  EXPECT_EQ(rc.total_tuples(), 1800u);
}

TEST(Workload, SameSeedSameHash) {
  RunConfig rc;
  rc.engine.set_window(512);
  rc.seed = 5;
  const Workload a = build_workload(rc);
  const Workload b = build_workload(rc);
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(a.arrivals, b.arrivals);
  rc.seed = 6;
  EXPECT_NE(build_workload(rc).hash, a.hash);
  EXPECT_NO_THROW(validate_arrivals(a.arrivals, JoinMode::TwoWay));
  EXPECT_EQ(a.arrivals.size(), rc.total_tuples());
}

TEST(Workload, UniformMatchRateNearTarget) {
  RunConfig rc;
  rc.engine.set_window(1024);
  rc.target_match_rate = 4;
  const Workload wl = build_workload(rc);
  const auto out = nested_loop_join(wl.arrivals, wl.diff, rc.engine);
  std::size_t probes = 0;
  std::size_t hits = 0;
  // Count only probes after both windows are full.
  Seq seen[2] = {0, 0};
  std::vector<std::size_t> per(wl.arrivals.size(), 0);
  std::size_t j = 0;
  for (std::size_t i = 0; i < wl.arrivals.size(); ++i) {
    const Tuple& t = wl.arrivals[i];
    std::size_t n = 0;
    while (j < out.size() && out[j].probe_stream == t.stream && out[j].probe_seq == t.seq) {
      ++n;
      ++j;
    }
    if (seen[1 - index_of(t.stream)] >= 1024) {
      ++probes;
      hits += n;
    }
    ++seen[index_of(t.stream)];
  }
  ASSERT_GT(probes, 1000u);
  EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(probes), 4.0, 0.4);
}

TEST(Workload, SelfJoinUsesOneStream) {
  RunConfig rc;
  rc.engine.set_window(256);
  rc.engine.join_mode = JoinMode::SelfJoin;
  rc.distribution = "gaussian";
  const Workload wl = build_workload(rc);
  EXPECT_NO_THROW(validate_arrivals(wl.arrivals, JoinMode::SelfJoin));
  EXPECT_GE(wl.diff, 0);
}

Experiment tiny_threads_experiment() {
  Experiment ex;
  ex.name = "tiny";
  ex.base.engine.set_window(256);
  ex.base.engine.concurrency_control = true;
  ex.base.engine.index = IndexKind::PimTree;
  ex.sweep("threads", {"1", "2", "4", "8"});
  return ex;
}

TEST(Experiment, RowCountIsPointsTimesReps) {
  ScopedEnv env("BENCH_THREADS", nullptr);
  Runner runner;
  const auto rows = runner.run(tiny_threads_experiment());
  ASSERT_EQ(rows.size(), 12u);
  std::set<std::string> hashes;
  for (const auto& r : rows) {
    EXPECT_EQ(r.experiment, "tiny");
    EXPECT_EQ(r.sweep_param, "threads");
    EXPECT_GT(r.throughput_tps, 0.0);
    EXPECT_NE(r.notes.find("oracle=pass"), std::string::npos);
    hashes.insert(r.seed_hash);
  }
  // Reps use seeds 1..3; the thread count does not change the workload.
  EXPECT_EQ(hashes.size(), 3u);
  EXPECT_EQ(rows[0].seed_hash, rows[3].seed_hash);
}

TEST(Experiment, SeriesPrefixRowNames) {
  Experiment ex = tiny_threads_experiment();
  ex.sweep("chain_length", {"2", "4"}).with_series("index", {"chained-b", "chained-ib"});
  ex.base.engine.concurrency_control = false;
  const auto rows = Runner().run(ex);
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows.front().experiment, "tiny/chained-b");
  EXPECT_EQ(rows.back().experiment, "tiny/chained-ib");
  const auto med = median_throughput(rows, "tiny/chained-b", {"2", "4"});
  ASSERT_EQ(med.size(), 2u);
  EXPECT_GT(med[0], 0.0);
}

TEST(Experiment, ValidationContract) {
  Experiment ex = tiny_threads_experiment();
  EXPECT_NO_THROW(validate(ex));
  ex.reps = 2;
  EXPECT_THROW(validate(ex), std::invalid_argument);
  ex.reps = 3;
  ex.base.tuples = ex.base.warmup_tuples() + 3 * 256;
  EXPECT_THROW(validate(ex), std::invalid_argument);
  ex.base.tuples = 0;
  ex.points.clear();
  EXPECT_THROW(validate(ex), std::invalid_argument);
  Experiment bad = tiny_threads_experiment();
  bad.sweep("merge_mode", {"nonblocking"});
  bad.base.engine.index = IndexKind::BTree;
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(Experiment, NamedExperimentsAreValid) {
  ScopedEnv env("BENCH_THREADS", nullptr);
  for (const auto& name : experiment_names()) {
    const Experiment ex = named_experiment(name);
    EXPECT_NO_THROW(validate(ex)) << name;
    EXPECT_GE(ex.reps, 3u);
    EXPECT_FALSE(ex.points.empty()) << name;
  }
  EXPECT_THROW(named_experiment("nope"), std::invalid_argument);
}

TEST(Experiment, ThreadCapFromEnvironment) {
  const Experiment ex = tiny_threads_experiment();
  {
    ScopedEnv env("BENCH_THREADS", "2");
    EXPECT_EQ(cell_config(ex, ex.series[0], ex.points[3]).engine.threads, 2u);
    EXPECT_EQ(cell_config(ex, ex.series[0], ex.points[0]).engine.threads, 1u);
  }
  {
    ScopedEnv env("BENCH_THREADS", nullptr);
    EXPECT_EQ(cell_config(ex, ex.series[0], ex.points[3]).engine.threads, 8u);
  }
  ScopedEnv env("BENCH_THREADS", "0");
  EXPECT_THROW(bench_threads_cap(), std::invalid_argument);
}

TEST(Experiment, TwinKeepsShapeAndShrinksScale) {
  RunConfig rc;
  rc.engine.window_r = 1u << 16;
  rc.engine.window_s = 1u << 14;
  rc.tuples = 1u << 20;
  rc.engine.threads = 8;
  const RunConfig t = verification_twin(rc);
  EXPECT_EQ(t.engine.window_r, 1024u);
  EXPECT_EQ(t.engine.window_s, 256u);
  EXPECT_EQ(t.tuples, 0u);
  EXPECT_EQ(t.engine.threads, 8u);
  EXPECT_EQ(signature(t), signature(rc));
  RunConfig other = rc;
  other.engine.task_size = 3;
  EXPECT_NE(signature(other), signature(rc));
}

TEST(Experiment, FileOverridesNamedBase) {
  const auto kv = KeyValues::parse(
      "base=chained\nexperiment=short_chain\nwindow_size=2^12\nsweep=chain_length\nvalues=2,8\nreps=4\n");
  const Experiment ex = experiment_from(kv);
  EXPECT_EQ(ex.name, "short_chain");
  EXPECT_EQ(ex.reps, 4u);
  EXPECT_EQ(ex.points.size(), 2u);
  EXPECT_EQ(ex.series.size(), 2u);
  EXPECT_EQ(ex.base.engine.window_r, 4096u);
  EXPECT_THROW(experiment_from(KeyValues::parse("sweep=threads\n")), std::invalid_argument);
  EXPECT_THROW(experiment_from(KeyValues::parse("bogus=1\n")), std::invalid_argument);
}

TEST(Csv, HeaderAndQuoting) {
  EXPECT_STREQ(csv_header(),
               "experiment,sweep_param,sweep_value,rep,seed_hash,throughput_tps,p50_latency_s,p99_latency_s,"
               "merge_count,notes");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  Measurement m;
  m.experiment = "x";
  m.sweep_param = "threads";
  m.sweep_value = "4";
  m.rep = 2;
  m.seed_hash = "00ff";
  m.throughput_tps = 1000;
  m.merge_count = 5;
  m.notes = "a=1;b=2";
  const std::string row = csv_row(m);
  EXPECT_EQ(row.rfind("x,threads,4,2,00ff,1000,", 0), 0u) << row;
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 9);
}

TEST(Experiment, KindNames) {
  for (auto k : {ExperimentKind::Join, ExperimentKind::Skew, ExperimentKind::MergeTime})
    EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  EXPECT_THROW(parse_experiment_kind("plot"), std::invalid_argument);
}

TEST(Instruments, SlopeOfPowerLaw) {
  std::vector<double> x, y;
  for (int e = 10; e <= 18; ++e) {
    x.push_back(std::pow(2.0, e));
    y.push_back(3e-9 * std::pow(x.back(), 1.1));
  }
  EXPECT_NEAR(loglog_slope(x, y), 1.1, 1e-9);
}

TEST(Instruments, SkewReportIsNormalized) {
  RunConfig rc;
  rc.engine.set_window(1u << 12);
  rc.engine.join_mode = JoinMode::SelfJoin;
  rc.engine.merge_ratio = 1;
  rc.engine.insertion_depth = 1;
  rc.distribution = "shifting_gaussian";
  rc.shift = 0;
  const SkewReport r = insert_skew(rc);
  ASSERT_GT(r.subindexes, 1u);
  double sum = 0;
  for (double s : r.ranked_shares) sum += s;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_TRUE(std::is_sorted(r.ranked_shares.rbegin(), r.ranked_shares.rend()));
  EXPECT_DOUBLE_EQ(r.top_share, r.ranked_shares.front());
  EXPECT_GE(r.max_over_mean, 1.0);
  EXPECT_GT(r.phase2_inserts, 0u);
}

TEST(CostIo, ParsesParameterFiles) {
  const auto kv = KeyValues::parse("model=btree\nw=2^10\nsigma_s=2\nH_b=3\nlambda_b_s=1\nL=4\n");
  const auto p = cost_params_from(kv);
  EXPECT_EQ(p.w, 1024.0);
  EXPECT_EQ(p.sigma_s, 2.0);
  EXPECT_EQ(p.H_b, 3.0);
  EXPECT_EQ(p.L, 4.0);
  EXPECT_THROW(cost_params_from(KeyValues::parse("lambda=1\n")), std::invalid_argument);
  cost::Breakdown b{1, 2, 3, 6};
  EXPECT_EQ(cost_csv_row(cost::Model::ChainedJoin, "L=2", b), "ChainedJoin,L=2,1,2,3,6");
  EXPECT_STREQ(cost_csv_header(), "model,parameter,step1,step2,step3,total");
}

}  // namespace
}  // namespace pimtree::bench
