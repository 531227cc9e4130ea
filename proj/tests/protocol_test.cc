//
// Copyright 2026 The Geohist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "geohist/protocol.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "geohist/reference.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace geohist {
namespace protocol {
namespace {

constexpr double kBetaE1 = 0.36787944117144233;

using qtree::NodeId;
using qtree::PrefixTree;

NodeId Node(const std::string& text) { return NodeId::FromString(text); }

UserRecord At(int x, int y) { return UserRecord{{{x, y, 1.0}}, std::nullopt}; }

RunConfig SmallConfig() {
  RunConfig config;
  config.users_per_query = 1000;
  config.shard.shard_size = 1000;
  config.shard.dropout_rate = 0.0;
  return config;
}

TEST(ClientUpdateTest, NoiselessOneHotAtRoot) {
  PrefixTree tree(4);
  noise::NoiseParams params{.alpha = 1.0, .beta = 0.0, .sensitivity = 1};
  RngStream rng(1);
  const auto vec =
      ClientUpdate(At(7, 9), tree, params, secagg::Modulus(32), rng);
  EXPECT_EQ(vec, (std::vector<uint64_t>{1}));
}

TEST(ClientUpdateTest, NoiselessOneHotInQuadrant) {
  const auto tree = PrefixTree(4).Split(NodeId());
  noise::NoiseParams params{.alpha = 1.0, .beta = 0.0, .sensitivity = 1};
  RngStream rng(1);
  // (12, 5) on the 16x16 map lives in quadrant {10}, slot 2 of 4.
  const auto vec =
      ClientUpdate(At(12, 5), tree, params, secagg::Modulus(32), rng);
  ASSERT_EQ(vec.size(), 4u);
  const int slot = tree.SlotOf(Node("10"));
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(vec[j], j == slot ? 1u : 0u);
  }
}

TEST(ClientUpdateTest, NoiseMatchesNoiseShareDistribution) {
  // The entrywise residual (vector - one-hot) is distributed like a direct
  // NoiseShare draw; compare the two samples.
  const auto tree = PrefixTree(4).Split(NodeId());
  noise::NoiseParams params{
      .alpha = 0.01, .beta = kBetaE1, .sensitivity = 1};
  const secagg::Modulus m(32);
  std::vector<int64_t> residuals, direct;
  for (int t = 0; t < 25000; ++t) {
    RngStream rng(DeriveSeed(1, t));
    const auto vec = ClientUpdate(At(0, 0), tree, params, m, rng);
    const int slot = tree.LongestPrefixSlot(qtree::EncodeLocation(0, 0, 4, 16));
    for (int j = 0; j < 4; ++j) {
      residuals.push_back(m.DecodeSigned(vec[j]) - (j == slot ? 1 : 0));
    }
    RngStream rng2(DeriveSeed(2, t));
    for (int j = 0; j < 4; ++j) direct.push_back(noise::NoiseShare(params, rng2));
  }
  EXPECT_GT(geohist::testing::TwoSampleChiSquareP(residuals, direct), 0.01);
}

TEST(ClientUpdateMultiTest, SingleLocationIsExactGamma) {
  PrefixTree tree(4);
  noise::NoiseParams params{.alpha = 1.0, .beta = 0.0, .sensitivity = 101};
  RngStream rng(3);
  const auto vec = ClientUpdateMulti(At(3, 3), tree, params,
                                     secagg::Modulus(32), 100, rng);
  EXPECT_EQ(vec, (std::vector<uint64_t>{100}));
}

TEST(ClientUpdateMultiTest, EqualWeightsSplitWithStochasticRounding) {
  const auto tree = PrefixTree(4).Split(NodeId());
  noise::NoiseParams params{.alpha = 1.0, .beta = 0.0, .sensitivity = 105};
  const secagg::Modulus m(32);
  UserRecord user{{{0, 0, 1.0}, {15, 15, 1.0}}, std::nullopt};
  double sum0 = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    RngStream rng(DeriveSeed(9, t));
    const auto vec = ClientUpdateMulti(user, tree, params, m, 101, rng);
    int64_t total = 0;
    for (uint64_t v : vec) {
      const int64_t s = m.DecodeSigned(v);
      EXPECT_TRUE(s == 0 || s == 50 || s == 51);
      total += s;
    }
    EXPECT_LE(total, 101 + 4);
    sum0 += static_cast<double>(m.DecodeSigned(vec[0]));
  }
  EXPECT_NEAR(sum0 / trials, 50.5, 0.05);
}

TEST(ClientUpdateMultiTest, L1BoundHoldsForRandomWeights) {
  const auto tree = PrefixTree(6).Split(NodeId()).Split(Node("01"));
  noise::NoiseParams params{.alpha = 1.0, .beta = 0.0, .sensitivity = 1};
  const secagg::Modulus m(32);
  const int64_t gamma = 100;
  RngStream gen(10);
  for (int t = 0; t < 2000; ++t) {
    UserRecord user;
    const int locations = 1 + static_cast<int>(gen.NextBelow(6));
    for (int l = 0; l < locations; ++l) {
      user.locations.push_back({static_cast<int>(gen.NextBelow(64)),
                                static_cast<int>(gen.NextBelow(64)),
                                gen.NextDouble() + 0.01});
    }
    RngStream rng(DeriveSeed(11, t));
    const auto vec = ClientUpdateMulti(user, tree, params, m, gamma, rng);
    int64_t l1 = 0;
    for (uint64_t v : vec) l1 += std::abs(m.DecodeSigned(v));
    EXPECT_LE(l1, gamma + tree.NumSlots());
  }
}

TEST(TauTargetTest, MatchesClosedForm) {
  EXPECT_DOUBLE_EQ(TauTarget(0.1, 10000, 4, 10000), 250.0);
  EXPECT_NEAR(TauTarget(0.1, 5000, 4, 10000), 176.77669529663687, 1e-10);
  EXPECT_DOUBLE_EQ(TauTarget(1.0, 64, 64, 64), 1.0);
  // The shards variant counts actual aggregations.
  EXPECT_DOUBLE_EQ(
      TauTarget(0.1, 20000, 4, 10000, VarianceFactor::kShards),
      0.1 * 5000 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(TauTarget(0.1, 20000, 4, 10000, VarianceFactor::kPaper),
                   0.1 * 5000 * 1.0);
}

TEST(ScheduleEpsTest, FollowsBudgetRule) {
  noise::PrivacyLedger ledger(1.0);
  // sigma chosen so the scheduled eps is exactly 0.2.
  const double sigma = noise::SigmaFromEps(0.2, 1);
  const auto normal = ScheduleEps(ledger, sigma, 2.0, 1);
  EXPECT_NEAR(normal.eps, 0.2, 1e-12);
  EXPECT_FALSE(normal.final_subquery);

  ledger.Spend(0.7);  // remaining 0.3: 2 * 0.2 > 0.3 -> spend the remainder
  const auto last = ScheduleEps(ledger, sigma, 2.0, 1);
  EXPECT_DOUBLE_EQ(last.eps, ledger.Remaining());
  EXPECT_TRUE(last.final_subquery);
}

TEST(UpdateTreeTest, SplitsAboveThreshold) {
  PrefixTree tree(6);
  const double counts[] = {100.0};
  const auto updated = UpdateTree(tree, counts, 50.0);
  EXPECT_EQ(updated.NumSlots(), 4);
}

TEST(UpdateTreeTest, MixedSplitAndCollapse) {
  // Four root children with counts {100, 10, 60, 5} at threshold 50:
  // children 0 and 2 split, children 1 and 3 collapse (<= 12.5). The root
  // then accumulates the two collapsed quadrants again, alongside the eight
  // grandchildren.
  const auto tree = PrefixTree(6).Split(NodeId());
  const double counts[] = {100.0, 10.0, 60.0, 5.0};
  const auto updated = UpdateTree(tree, counts, 50.0);
  EXPECT_TRUE(updated.Accumulates(NodeId()));
  EXPECT_FALSE(updated.Contains(Node("01")));
  EXPECT_FALSE(updated.Contains(Node("11")));
  EXPECT_TRUE(updated.Contains(Node("00 10")));
  EXPECT_TRUE(updated.Contains(Node("10 01")));
  EXPECT_EQ(updated.NumSlots(), 9);
}

TEST(UpdateTreeTest, BoundaryCountIsRetained) {
  const auto tree = PrefixTree(6).Split(NodeId());
  const double counts[] = {50.0, 50.0, 50.0, 50.0};
  const auto updated = UpdateTree(tree, counts, 50.0);
  EXPECT_EQ(updated, tree);  // neither > t nor <= t/4
}

TEST(UpdateTreeTest, RootNeverCollapsesAndMaxDepthNeverSplits) {
  PrefixTree root_only(6);
  const double zero[] = {0.0};
  const auto still_root = UpdateTree(root_only, zero, 100.0);
  EXPECT_EQ(still_root.NumSlots(), 1);

  const auto deep = PrefixTree::FromNodes({Node("10")}, 1);
  const double counts[] = {0.0, 1000.0};
  const auto updated = UpdateTree(deep, counts, 10.0);
  EXPECT_TRUE(updated.Contains(Node("10")));
  EXPECT_EQ(updated.NumSlots(), 2);
}

dataset::Population UniformPopulation(int n, int side, uint64_t seed) {
  return dataset::Synthetic(dataset::NamedSpec("uniform"), n, side, seed);
}

TEST(RunHistogramTest, NoiselessRootCountsUsers) {
  auto config = SmallConfig();
  config.users_per_query = 100;
  config.noise_disabled = true;
  const auto pop = UniformPopulation(500, 16, 1);
  const PrefixTree tree(4);
  const auto result = RunHistogram(config, 1.0, pop, tree, 77);
  ASSERT_EQ(result.counts.size(), 1u);
  EXPECT_DOUBLE_EQ(result.counts[0], 100.0);
  EXPECT_DOUBLE_EQ(result.grid.Total(), 100.0);
}

TEST(RunHistogramTest, NoiseStdMatchesSingleShardCalibration) {
  // T=1, one full shard at eps=1: count within 4 sigma of the user count.
  auto config = SmallConfig();
  config.users_per_query = 10000;
  config.shard.shard_size = 10000;
  const auto pop = UniformPopulation(20000, 16, 2);
  const PrefixTree tree(4);
  const auto result = RunHistogram(config, 1.0, pop, tree, 5);
  const double sigma = noise::SigmaFromEps(1.0, 1);
  EXPECT_NEAR(result.counts[0], 10000.0, 4 * sigma);
}

TEST(RunHistogramTest, NoiseVarianceAddsAcrossShards) {
  // U = 3 S_max: three shards, so the noise std is sigma * sqrt(3).
  auto config = SmallConfig();
  config.users_per_query = 3000;
  config.shard.shard_size = 1000;
  const auto pop = UniformPopulation(6000, 16, 3);
  const PrefixTree tree(4);
  const int runs = 200;
  double sum = 0, sq = 0;
  for (int r = 0; r < runs; ++r) {
    const auto result =
        RunHistogram(config, 1.0, pop, tree, DeriveSeed(123, r));
    const double noise_part = result.counts[0] - 3000.0;
    sum += noise_part;
    sq += noise_part * noise_part;
  }
  const double var = (sq - sum * sum / runs) / (runs - 1);
  const double expected_std = noise::SigmaFromEps(1.0, 1) * std::sqrt(3.0);
  EXPECT_NEAR(std::sqrt(var), expected_std, 0.15 * expected_std);
}

TEST(RunHistogramTest, MatchesExactOracleWithNoiseOff) {
  auto config = SmallConfig();
  config.users_per_query = 800;
  config.noise_disabled = true;
  config.keep_samples = true;
  const auto pop = UniformPopulation(2000, 64, 4);
  const auto tree =
      PrefixTree(6).Split(NodeId()).Split(Node("10")).Collapse(Node("01"));
  const auto result = RunHistogram(config, 1.0, pop, tree, 99);
  const auto oracle =
      reference::ExactSlotCounts(pop, result.sampled_users, tree);
  ASSERT_EQ(result.counts.size(), oracle.size());
  for (size_t i = 0; i < oracle.size(); ++i) {
    EXPECT_DOUBLE_EQ(result.counts[i], oracle[i]);
  }
}

TEST(RunHistogramTest, RejectsOversizedSample) {
  auto config = SmallConfig();
  config.users_per_query = 5000;
  const auto pop = UniformPopulation(100, 16, 5);
  EXPECT_THROW(RunHistogram(config, 1.0, pop, PrefixTree(4), 1),
               std::invalid_argument);
}

TEST(RunAdaptiveTest, BudgetBalancesExactly) {
  auto config = SmallConfig();
  const auto pop = UniformPopulation(3000, 32, 6);
  const auto result = RunAdaptive(config, pop, 42);
  EXPECT_EQ(result.eps_remaining, 0.0);
  EXPECT_EQ(result.eps_spent, config.eps_total);
  EXPECT_GE(result.log.size(), 2u);
  EXPECT_TRUE(result.log.back().final_subquery);
  double sum = 0;
  for (const auto& record : result.log) sum += record.eps;
  EXPECT_NEAR(sum, config.eps_total, 1e-12);
}

TEST(RunAdaptiveTest, HotspotGrowsChainAndStaysCheap) {
  // Every user at one coordinate: the final tree follows that prefix down
  // and total communication stays far below the flat 4^max_depth vector.
  dataset::Population pop;
  pop.side = 64;
  pop.users.assign(4000, At(37, 22));
  auto config = SmallConfig();
  config.calibration_c = 0.1;
  const auto result = RunAdaptive(config, pop, 11);
  const auto leaf = qtree::EncodeLocation(37, 22, 6, 64);
  const int slot = result.tree.LongestPrefixSlot(leaf);
  EXPECT_EQ(result.tree.SlotNode(slot), leaf);  // refined to max depth
  EXPECT_LT(result.comm, 400);
  // The hotspot leaf holds (nearly) all the mass.
  EXPECT_GT(result.counts[slot], 900.0);
}

TEST(RunAdaptiveTest, InformativePriorSavesSubQueries) {
  const auto pop =
      dataset::Synthetic(dataset::NamedSpec("manhattan"), 30000, 64, 7);
  auto config = SmallConfig();
  config.users_per_query = 5000;
  config.shard.shard_size = 5000;
  const auto cold = RunAdaptive(config, pop, 21);
  const auto warm = RunAdaptive(config, pop, 22, &cold.tree);
  EXPECT_LT(warm.log.size(), cold.log.size());
  EXPECT_EQ(warm.eps_remaining, 0.0);
}

TEST(RunAdaptiveTest, SubQuerySamplesAreDisjointAcrossShards) {
  auto config = SmallConfig();
  config.users_per_query = 900;
  config.shard.shard_size = 300;  // three shards per sub-query
  config.keep_samples = true;
  const auto pop = UniformPopulation(2000, 32, 8);
  const auto result = RunAdaptive(config, pop, 9);
  for (const auto& record : result.log) {
    std::set<int32_t> unique(record.sampled_users.begin(),
                             record.sampled_users.end());
    EXPECT_EQ(unique.size(), record.sampled_users.size());
  }
}

TEST(RunAdaptiveTest, MaxSubqueriesCapTerminates) {
  auto config = SmallConfig();
  config.max_subqueries = 3;
  config.calibration_c = 1e6;  // huge noise targets: tiny spends per sub-query
  const auto pop = UniformPopulation(3000, 32, 10);
  const auto result = RunAdaptive(config, pop, 31);
  // The capped last round spends the remainder, so the budget still
  // balances exactly.
  EXPECT_EQ(result.log.size(), 3u);
  EXPECT_TRUE(result.log.back().final_subquery);
  EXPECT_EQ(result.eps_remaining, 0.0);
}

TEST(RunAdaptiveAuxTest, AllZeroBitsGiveZeroProportions) {
  auto config = SmallConfig();
  config.users_per_query = 500;
  config.noise_disabled = true;
  dataset::Population pop = UniformPopulation(1000, 32, 11);
  for (auto& user : pop.users) user.aux_bit = false;
  const auto result = RunAdaptiveAux(config, pop, 13);
  for (const auto& region : result.regions) {
    EXPECT_DOUBLE_EQ(region.proportion, 0.0);
    EXPECT_DOUBLE_EQ(region.ci_low, 0.0);
  }
}

TEST(RunAdaptiveAuxTest, WaldIntervalMatchesHandComputation) {
  // 1000 users, 300 positive, no noise, a single sub-query at the root.
  auto config = SmallConfig();
  config.users_per_query = 1000;
  config.noise_disabled = true;
  config.max_subqueries = 1;
  dataset::Population pop;
  pop.side = 32;
  for (int i = 0; i < 2000; ++i) {
    auto user = At(i % 32, (i / 32) % 32);
    user.aux_bit = i % 10 < 3;  // 30% positive
    pop.users.push_back(user);
  }
  const auto result = RunAdaptiveAux(config, pop, 17);
  ASSERT_EQ(result.regions.size(), 1u);
  const auto& region = result.regions[0];
  EXPECT_DOUBLE_EQ(region.total, 1000.0);
  EXPECT_NEAR(region.proportion, 0.30, 0.05);
  const double p = region.proportion;
  const double half = 1.959963984540054 * std::sqrt(p * (1 - p) / 1000.0);
  EXPECT_NEAR(region.ci_high - region.ci_low, 2 * half, 1e-12);
  // At exactly p = 0.30 the half-width is 0.0284.
  EXPECT_NEAR(1.959963984540054 * std::sqrt(0.3 * 0.7 / 1000.0),
              0.028402576508932538, 1e-15);
}

TEST(RunAdaptiveAuxTest, InfectionKernelConcentratesProportionMap) {
  auto config = SmallConfig();
  config.users_per_query = 8000;
  config.shard.shard_size = 8000;
  config.aux_ci_split = 0.2;
  dataset::Population pop = UniformPopulation(20000, 64, 12);
  // Bit = 1 with probability given by a Gaussian bump at (16, 48).
  RngStream rng(55);
  for (auto& user : pop.users) {
    const auto& loc = user.locations.front();
    const double d2 = (loc.x - 16.0) * (loc.x - 16.0) +
                      (loc.y - 48.0) * (loc.y - 48.0);
    user.aux_bit = rng.NextBernoulli(std::exp(-d2 / (2 * 36.0)));
  }
  const auto result = RunAdaptiveAux(config, pop, 19);
  // The proportion map peaks near the kernel center.
  int best_x = 0, best_y = 0;
  double best = -1;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (result.proportion_map.At(x, y) > best) {
        best = result.proportion_map.At(x, y);
        best_x = x;
        best_y = y;
      }
    }
  }
  EXPECT_NEAR(best_x, 16, 16);
  EXPECT_NEAR(best_y, 48, 16);
  EXPECT_EQ(result.eps_spent, config.eps_total);
}

TEST(RunAdaptiveAuxTest, MissingBitsAreRejected) {
  auto config = SmallConfig();
  config.users_per_query = 100;
  const auto pop = UniformPopulation(200, 32, 14);  // no aux bits
  EXPECT_THROW(RunAdaptiveAux(config, pop, 1), std::invalid_argument);
}

TEST(RunConfigTest, Validation) {
  RunConfig config;
  config.eps_total = -1;
  EXPECT_THROW(config.Validate(), std::invalid_argument);
  config = RunConfig();
  config.shard.dropout_rate = 0.6;
  EXPECT_THROW(config.Validate(), std::invalid_argument);
  config = RunConfig();
  config.max_subqueries = 0;
  EXPECT_THROW(config.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace protocol
}  // namespace geohist
