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

#include <cmath>
#include <random>

#include "pimtree/cost_model.hpp"

namespace pimtree::cost {
namespace {

CostParams unit_lambdas() {
  CostParams p;
  p.lambda_b_s = p.lambda_b_i = p.lambda_b_d = p.lambda_ib_s = 1;
  p.tau_c = 1;
  return p;
}

TEST(CostModel, GenericIsSumOfSteps) {
  CostParams p;
  p.C_S = 5;
  p.C_D = 3;
  p.C_I = 2;
  const Breakdown b = evaluate(Model::Generic, p);
  EXPECT_EQ(b.step1, 5);
  EXPECT_EQ(b.step2, 3);
  EXPECT_EQ(b.step3, 2);
  EXPECT_EQ(b.total, 10);
}

TEST(CostModel, BTreeSubstitution) {
  CostParams p = unit_lambdas();
  p.H_b = 3;
  p.sigma_s = 2;
  const Breakdown b = evaluate(Model::BTreeJoin, p);
  EXPECT_EQ(b.step1, 5);
  EXPECT_EQ(b.step2, 3);
  EXPECT_EQ(b.step3, 3);
  EXPECT_EQ(b.total, 11);
}

TEST(CostModel, ChainedSubstitution) {
  CostParams p = unit_lambdas();
  p.L = 2;
  p.H_c = 2;
  p.sigma_s = 2;
  const Breakdown b = evaluate(Model::ChainedJoin, p);
  EXPECT_EQ(b.step1, 7);
  EXPECT_EQ(b.step2, 0);
  EXPECT_EQ(b.step3, 2);
  EXPECT_EQ(b.total, 9);
}

TEST(CostModel, MissingParametersThrow) {
  CostParams p = unit_lambdas();
  EXPECT_THROW(evaluate(Model::Generic, p), std::invalid_argument);
  EXPECT_THROW(evaluate(Model::BTreeJoin, p), std::invalid_argument);  // no sigma
  p.sigma = 1e-6;
  EXPECT_THROW(evaluate(Model::ChainedJoin, p), std::invalid_argument);
  EXPECT_THROW(evaluate(Model::RoundRobinJoin, p), std::invalid_argument);
  EXPECT_THROW(evaluate(Model::ImTreeJoin, p), std::invalid_argument);
  EXPECT_THROW(evaluate(Model::PimTreeJoin, p), std::invalid_argument);
  p.sigma_s = 5;  // w * sigma is about 1.05
  EXPECT_THROW(evaluate(Model::BTreeJoin, p), std::invalid_argument);
}

TEST(CostModel, RejectsInvalidValues) {
  CostParams p = unit_lambdas();
  p.sigma_s = 1;
  p.m = 0;
  EXPECT_THROW(evaluate(Model::BTreeJoin, p), std::invalid_argument);
  p.m = 0.5;
  p.L = 1;
  EXPECT_THROW(evaluate(Model::BTreeJoin, p), std::invalid_argument);
  p.L.reset();
  p.tau_c = -1;
  EXPECT_THROW(evaluate(Model::BTreeJoin, p), std::invalid_argument);
}

TEST(CostModel, DerivedHeights) {
  CostParams p;
  p.w = 1 << 20;
  p.f_b = 32;
  p.f_ib = 16;
  p.L = 4;
  p.P = 32;
  p.m = 0.125;
  p.D_I = 2;
  EXPECT_NEAR(height_b(p), 4.0, 1e-12);
  EXPECT_NEAR(height_c(p), 4.0 - 0.4, 1e-12);
  EXPECT_NEAR(height_p(p), 3.0, 1e-12);
  EXPECT_NEAR(height_s(p), 5.0, 1e-12);
  EXPECT_NEAR(height_i(p), std::log2(65536.0) / 5, 1e-12);
  EXPECT_NEAR(height_i_prime(p), std::log2(256.0) / 5, 1e-12);
  p.w = 4;
  EXPECT_EQ(height_s(p), 1.0);
  EXPECT_EQ(height_i(p), 1.0);
  p.H_b = 9;
  EXPECT_EQ(height_b(p), 9.0);
}

CostParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 10.0);
  CostParams p;
  p.w = std::pow(2.0, std::uniform_int_distribution<int>(8, 26)(rng));
  p.tau_c = u(rng);
  p.sigma_s = u(rng);
  p.f_b = std::uniform_int_distribution<int>(4, 64)(rng);
  p.f_ib = std::uniform_int_distribution<int>(4, 64)(rng);
  p.lambda_b_s = u(rng);
  p.lambda_b_i = u(rng);
  p.lambda_b_d = u(rng);
  p.lambda_ib_s = u(rng);
  p.m = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
  p.L = std::uniform_int_distribution<int>(2, 16)(rng);
  p.P = std::uniform_int_distribution<int>(1, 32)(rng);
  p.D_I = std::uniform_int_distribution<int>(0, 4)(rng);
  p.M = u(rng) * p.w;
  p.M_prime = u(rng) * p.w;
  return p;
}

TEST(CostModel, RoundRobinWithOneCoreIsBTree) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100; ++i) {
    CostParams p = random_params(rng);
    p.P = 1;
    const Breakdown rr = evaluate(Model::RoundRobinJoin, p);
    const Breakdown bt = evaluate(Model::BTreeJoin, p);
    EXPECT_DOUBLE_EQ(rr.total, bt.total) << "draw " << i;
    EXPECT_DOUBLE_EQ(rr.step2, bt.step2);
  }
}

TEST(CostModel, TotalsDecompose) {
  std::mt19937_64 rng(7);
  const Model models[] = {Model::BTreeJoin, Model::ChainedJoin, Model::RoundRobinJoin, Model::ImTreeJoin,
                          Model::PimTreeJoin};
  for (int i = 0; i < 200; ++i) {
    const CostParams p = random_params(rng);
    for (Model m : models) {
      const Breakdown b = evaluate(m, p);
      EXPECT_DOUBLE_EQ(b.total, b.step1 + b.step2 + b.step3) << to_string(m);
      EXPECT_GE(b.step2, 0);
    }
  }
}

TEST(CostModel, ChainedInsertMatchesBTreeWhenHeightsAgree) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    CostParams p = random_params(rng);
    p.H_c = height_b(p);
    EXPECT_DOUBLE_EQ(evaluate(Model::ChainedJoin, p).step3, evaluate(Model::BTreeJoin, p).step3);
  }
}

TEST(CostModel, PimSpendsExtraStepsDescendingTheImmutablePart) {
  CostParams p = unit_lambdas();
  p.sigma_s = 2;
  p.m = 0.5;
  p.M_prime = 10;
  p.H_S = 3;
  p.H_I_prime = 2;
  p.D_I = 3;
  p.w = 10;
  const Breakdown b = evaluate(Model::PimTreeJoin, p);
  EXPECT_DOUBLE_EQ(b.step1, 3 + 2 + 2 * 1.25);
  EXPECT_DOUBLE_EQ(b.step2, 2);
  EXPECT_DOUBLE_EQ(b.step3, 3 + 2);
}

TEST(Crossover, RoundRobinSearchIsLinearInP) {
  CostParams p = unit_lambdas();
  p.sigma_s = 2;
  p.H_p = 3;
  const auto rows = crossover(Model::RoundRobinJoin, Model::BTreeJoin, SweepParam::P, {1, 2, 4, 8, 16}, p);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.a.step1 - 2, 3 * r.value);
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.b.total, rows[0].b.total);
}

TEST(Crossover, ChainedSearchGrowsWithL) {
  CostParams p = unit_lambdas();
  p.w = 1 << 20;
  p.f_b = 32;
  p.sigma_s = 2;
  const auto rows = crossover(Model::ChainedJoin, Model::BTreeJoin, SweepParam::L, {2, 4, 8, 16, 32}, p);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    // L * H_c grows roughly in proportion to L.
    const double prev = rows[i - 1].value * height_c([&] { auto q = p; q.L = rows[i - 1].value; return q; }());
    const double cur = rows[i].value * height_c([&] { auto q = p; q.L = rows[i].value; return q; }());
    EXPECT_GT(rows[i].a.step1, rows[i - 1].a.step1);
    EXPECT_GT(cur / prev, 1.5);
  }
}

TEST(Crossover, MergeRatioTradesMergeCostForInsertHeight) {
  CostParams p = unit_lambdas();
  p.w = 1 << 20;
  p.f_b = 16;
  p.sigma_s = 2;
  p.M = 3.0 * p.w;
  std::vector<double> ms;
  for (int e = -10; e <= 0; ++e) ms.push_back(std::pow(2.0, e));
  const auto rows = crossover(Model::ImTreeJoin, Model::BTreeJoin, SweepParam::M, ms, p);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].a.step2, rows[i - 1].a.step2);
    EXPECT_NEAR(rows[i].a.step2 * rows[i].value, 3.0, 1e-12);
    EXPECT_GT(rows[i].a.step3, rows[i - 1].a.step3);
  }
}

TEST(Crossover, ParsesSweepNames) {
  EXPECT_EQ(parse_sweep_param("sigma_s"), SweepParam::SigmaS);
  EXPECT_EQ(parse_sweep_param("D_I"), SweepParam::DI);
  EXPECT_THROW(parse_sweep_param("q"), std::invalid_argument);
  EXPECT_EQ(parse_model("round-robin"), Model::RoundRobinJoin);
  EXPECT_EQ(parse_model("PimTreeJoin"), Model::PimTreeJoin);
  EXPECT_THROW(parse_model("bwtree"), std::invalid_argument);
}

}  // namespace
}  // namespace pimtree::cost
