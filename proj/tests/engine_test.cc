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

#include "geohist/engine.h"

#include <omp.h>

#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"

namespace geohist {
namespace engine {
namespace {

std::vector<std::vector<ClientVote>> RandomClients(int n, int num_slots,
                                                   bool fractional,
                                                   uint64_t seed) {
  RngStream rng(seed);
  std::vector<std::vector<ClientVote>> clients(n);
  for (int i = 0; i < n; ++i) {
    const int votes = fractional ? 1 + static_cast<int>(rng.NextBelow(3)) : 1;
    for (int v = 0; v < votes; ++v) {
      const double value = fractional ? rng.NextDouble() * 40 : 1.0;
      clients[i].push_back(
          {static_cast<int32_t>(rng.NextBelow(num_slots)), value});
    }
  }
  return clients;
}

ShardSpec BaseSpec(int num_slots, int clients, double dropout,
                   NoiseMode mode) {
  ShardSpec spec;
  spec.num_slots = num_slots;
  spec.params = noise::ShardNoiseParams(1.0, 1, clients, dropout);
  spec.dropout_rate = dropout;
  spec.shard_seed = 313;
  spec.noise_mode = mode;
  return spec;
}

TEST(RunShardTest, KernelMatchesSerialReferencePerClient) {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const auto clients = RandomClients(400, 32, /*fractional=*/false, seed);
    auto spec = BaseSpec(32, 400, 0.1, NoiseMode::kPerClient);
    spec.shard_seed = DeriveSeed(99, seed);
    const auto kernel = RunShard(clients, spec);
    const auto serial = reference::RunShardSerial(clients, spec);
    ASSERT_EQ(kernel.has_value(), serial.has_value());
    ASSERT_TRUE(kernel.has_value());
    EXPECT_EQ(kernel->sum, serial->sum);
    EXPECT_EQ(kernel->contributors, serial->contributors);
    EXPECT_EQ(kernel->dropped, serial->dropped);
  }
}

TEST(RunShardTest, KernelMatchesSerialWithFractionalVotes) {
  const auto clients = RandomClients(200, 16, /*fractional=*/true, 5);
  auto spec = BaseSpec(16, 200, 0.05, NoiseMode::kPerClient);
  spec.params.sensitivity = 100;  // multi-location style
  const auto kernel = RunShard(clients, spec);
  const auto serial = reference::RunShardSerial(clients, spec);
  ASSERT_TRUE(kernel.has_value() && serial.has_value());
  EXPECT_EQ(kernel->sum, serial->sum);
}

TEST(RunShardTest, KernelMatchesSerialAggregated) {
  const auto clients = RandomClients(500, 64, /*fractional=*/false, 8);
  const auto spec = BaseSpec(64, 500, 0.1, NoiseMode::kAggregated);
  const auto kernel = RunShard(clients, spec);
  const auto serial = reference::RunShardSerial(clients, spec);
  ASSERT_TRUE(kernel.has_value() && serial.has_value());
  EXPECT_EQ(kernel->sum, serial->sum);
  EXPECT_EQ(kernel->contributors, serial->contributors);
}

TEST(RunShardTest, ResultIndependentOfThreadCount) {
  const auto clients = RandomClients(300, 16, /*fractional=*/true, 21);
  const auto spec = BaseSpec(16, 300, 0.08, NoiseMode::kPerClient);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto single = RunShard(clients, spec);
  omp_set_num_threads(saved);
  const auto multi = RunShard(clients, spec);
  ASSERT_TRUE(single.has_value() && multi.has_value());
  EXPECT_EQ(single->sum, multi->sum);
}

TEST(RunShardTest, MasksDoNotChangeTheSum) {
  const auto clients = RandomClients(250, 8, /*fractional=*/false, 2);
  auto spec = BaseSpec(8, 250, 0.0, NoiseMode::kPerClient);
  spec.simulate_masks = true;
  const auto masked = RunShard(clients, spec);
  spec.simulate_masks = false;
  const auto unmasked = RunShard(clients, spec);
  ASSERT_TRUE(masked.has_value() && unmasked.has_value());
  EXPECT_EQ(masked->sum, unmasked->sum);
}

TEST(RunShardTest, DroppedClientContributesNothing) {
  // With beta = 0 and unit votes, the sum equals the survivor count: no data,
  // noise, or mask residue from dropped clients.
  std::vector<std::vector<ClientVote>> clients(120, {{0, 1.0}});
  auto spec = BaseSpec(1, 120, 0.25, NoiseMode::kPerClient);
  spec.params.beta = 0;
  const auto report = RunShard(clients, spec);
  ASSERT_TRUE(report.has_value());
  EXPECT_EQ(report->contributors + report->dropped, 120);
  EXPECT_EQ(report->sum[0], static_cast<uint64_t>(report->contributors));
}

TEST(RunShardTest, FailureConsistentAcrossImplementations) {
  std::vector<std::vector<ClientVote>> clients(6, {{0, 1.0}});
  auto spec = BaseSpec(1, 6, 0.45, NoiseMode::kPerClient);
  bool found_failure = false;
  for (uint64_t seed = 0; seed < 400; ++seed) {
    spec.shard_seed = seed;
    const auto kernel = RunShard(clients, spec);
    const auto serial = reference::RunShardSerial(clients, spec);
    ASSERT_EQ(kernel.has_value(), serial.has_value()) << seed;
    found_failure |= !kernel.has_value();
  }
  EXPECT_TRUE(found_failure);
}

TEST(RunShardTest, AggregatedNoiseMatchesPerClientDistribution) {
  // Both modes must produce discrete-Laplace shard noise; compare both
  // against the analytic pmf on a one-slot shard with zero data.
  const int clients_n = 50;
  const int trials = 20000;
  const double beta = 0.36787944117144233;
  std::vector<std::vector<ClientVote>> clients(clients_n,
                                               {{0, 0.0}});
  for (NoiseMode mode : {NoiseMode::kPerClient, NoiseMode::kAggregated}) {
    std::vector<int64_t> sums(trials);
    for (int t = 0; t < trials; ++t) {
      auto spec = BaseSpec(1, clients_n, 0.0, mode);
      spec.modulus_bits = 32;
      spec.shard_seed = DeriveSeed(4242, t, static_cast<uint64_t>(mode));
      const auto report = RunShard(clients, spec);
      ASSERT_TRUE(report.has_value());
      sums[t] = secagg::Modulus(32).DecodeSigned(report->sum[0]);
    }
    EXPECT_GT(geohist::testing::DiscreteLaplaceGofP(sums, beta), 0.01)
        << "mode " << static_cast<int>(mode);
  }
}

TEST(AddRoundedVotesTest, RoundsUpWithFractionalProbability) {
  // A value of 0.8 rounds to 1 with probability 0.8.
  const std::vector<ClientVote> votes = {{0, 0.8}};
  int ups = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    RngStream rng(DeriveSeed(77, t));
    std::vector<int64_t> dense(1, 0);
    AddRoundedVotes(votes, rng, dense);
    ups += dense[0] == 1 ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(ups) / trials, 0.8, 0.01);
}

TEST(AddRoundedVotesTest, IntegerValuesConsumeNoRandomness) {
  const std::vector<ClientVote> votes = {{0, 3.0}, {1, 100.0}};
  RngStream rng(5);
  const uint64_t before = rng();
  RngStream replay(5);
  std::vector<int64_t> dense(2, 0);
  EXPECT_EQ(AddRoundedVotes(votes, replay, dense), 103);
  EXPECT_EQ(dense[0], 3);
  EXPECT_EQ(dense[1], 100);
  EXPECT_EQ(replay(), before);  // stream untouched by rounding
}

}  // namespace
}  // namespace engine
}  // namespace geohist
