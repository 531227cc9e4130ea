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

#include <cmath>

namespace geohist {
namespace engine {
namespace {

// Survivor pass shared by both implementations: the dropout decision is the
// first draw of each client's data stream.
struct Survivors {
  std::vector<int32_t> indices;
  int dropped = 0;
};

Survivors DecideSurvivors(int n, const ShardSpec& spec) {
  Survivors out;
  out.indices.reserve(n);
  for (int i = 0; i < n; ++i) {
    RngStream rng(DeriveSeed(spec.shard_seed, kSaltClientData, i));
    if (rng.NextBernoulli(spec.dropout_rate)) {
      ++out.dropped;
    } else {
      out.indices.push_back(i);
    }
  }
  return out;
}

}  // namespace

int64_t AddRoundedVotes(std::span<const ClientVote> votes, RngStream& rng,
                        std::span<int64_t> dense) {
  int64_t l1 = 0;
  for (const ClientVote& vote : votes) {
    int64_t value = static_cast<int64_t>(std::floor(vote.value));
    const double frac = vote.value - static_cast<double>(value);
    if (frac > 0 && rng.NextBernoulli(frac)) ++value;
    dense[vote.slot] += value;
    l1 += value;
  }
  return l1;
}

std::optional<secagg::ShardReport> RunShard(
    std::span<const std::vector<ClientVote>> clients, const ShardSpec& spec) {
  const int n = static_cast<int>(clients.size());
  const int num_slots = spec.num_slots;
  const secagg::Modulus m(spec.modulus_bits);

  const Survivors survivors = DecideSurvivors(n, spec);
  if (n > 0 && 2 * survivors.dropped >= n) return std::nullopt;
  const int k = static_cast<int>(survivors.indices.size());

  secagg::ShardReport report;
  report.sum.assign(num_slots, 0);
  report.contributors = k;
  report.dropped = survivors.dropped;
  if (k == 0) return report;

  if (spec.noise_mode == NoiseMode::kPerClient) {
#pragma omp parallel
    {
      std::vector<uint64_t> acc(num_slots, 0);
      std::vector<int64_t> vec(num_slots);
#pragma omp for schedule(static)
      for (int a = 0; a < k; ++a) {
        const int i = survivors.indices[a];
        RngStream data_rng(DeriveSeed(spec.shard_seed, kSaltClientData, i));
        data_rng.NextBernoulli(spec.dropout_rate);  // consumed survivor draw
        std::fill(vec.begin(), vec.end(), 0);
        AddRoundedVotes(clients[i], data_rng, vec);
        if (spec.params.beta > 0) {
          for (int j = 0; j < num_slots; ++j) {
            vec[j] += noise::NoiseShare(spec.params, data_rng);
          }
        }
        if (spec.simulate_masks) {
          // Pairwise chain masks: client a adds u_a - u_{a+1 mod k}, each u
          // drawn from its owner's mask stream. The chain telescopes to zero
          // across the shard while each mask stays marginally uniform.
          RngStream own(DeriveSeed(spec.shard_seed, kSaltClientMask, i));
          RngStream next(DeriveSeed(spec.shard_seed, kSaltClientMask,
                                    survivors.indices[(a + 1) % k]));
          for (int j = 0; j < num_slots; ++j) {
            const uint64_t masked =
                m.Reduce(m.EncodeSigned(vec[j]) + m.Reduce(own()) -
                         m.Reduce(next()));
            acc[j] = m.Reduce(acc[j] + masked);
          }
        } else {
          for (int j = 0; j < num_slots; ++j) {
            acc[j] = m.Reduce(acc[j] + m.EncodeSigned(vec[j]));
          }
        }
      }
#pragma omp critical
      for (int j = 0; j < num_slots; ++j) {
        report.sum[j] = m.Reduce(report.sum[j] + acc[j]);
      }
    }
    return report;
  }

  // Aggregated mode: exact data sum plus one distributionally exact noise
  // draw per slot. Per-client modulo clipping commutes with the modular sum,
  // so clipping once at the end is equivalent.
  std::vector<int64_t> data(num_slots, 0);
#pragma omp parallel
  {
    std::vector<int64_t> local(num_slots, 0);
#pragma omp for schedule(static)
    for (int a = 0; a < k; ++a) {
      const int i = survivors.indices[a];
      RngStream data_rng(DeriveSeed(spec.shard_seed, kSaltClientData, i));
      data_rng.NextBernoulli(spec.dropout_rate);
      AddRoundedVotes(clients[i], data_rng, local);
    }
#pragma omp critical
    for (int j = 0; j < num_slots; ++j) data[j] += local[j];
  }
  const double shape = spec.params.alpha * static_cast<double>(k);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < num_slots; ++j) {
    int64_t noise = 0;
    if (spec.params.beta > 0) {
      RngStream slot_rng(DeriveSeed(spec.shard_seed, kSaltSlotNoise, j));
      noise = noise::SummedNoise(shape, spec.params.beta, slot_rng);
    }
    report.sum[j] = m.EncodeSigned(data[j] + noise);
  }
  return report;
}

}  // namespace engine

namespace reference {

std::optional<secagg::ShardReport> RunShardSerial(
    std::span<const std::vector<engine::ClientVote>> clients,
    const engine::ShardSpec& spec) {
  const int n = static_cast<int>(clients.size());
  const int num_slots = spec.num_slots;
  const secagg::Modulus m(spec.modulus_bits);

  std::vector<int32_t> survivors;
  int dropped = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(DeriveSeed(spec.shard_seed, engine::kSaltClientData, i));
    if (rng.NextBernoulli(spec.dropout_rate)) {
      ++dropped;
    } else {
      survivors.push_back(i);
    }
  }
  if (n > 0 && 2 * dropped >= n) return std::nullopt;
  const int k = static_cast<int>(survivors.size());

  secagg::ShardReport report;
  report.sum.assign(num_slots, 0);
  report.contributors = k;
  report.dropped = dropped;
  if (k == 0) return report;

  if (spec.noise_mode == engine::NoiseMode::kAggregated) {
    std::vector<int64_t> data(num_slots, 0);
    for (int i : survivors) {
      RngStream rng(DeriveSeed(spec.shard_seed, engine::kSaltClientData, i));
      rng.NextBernoulli(spec.dropout_rate);
      engine::AddRoundedVotes(clients[i], rng, data);
    }
    const double shape = spec.params.alpha * static_cast<double>(k);
    for (int j = 0; j < num_slots; ++j) {
      int64_t noise = 0;
      if (spec.params.beta > 0) {
        RngStream slot_rng(
            DeriveSeed(spec.shard_seed, engine::kSaltSlotNoise, j));
        noise = noise::SummedNoise(shape, spec.params.beta, slot_rng);
      }
      report.sum[j] = m.EncodeSigned(data[j] + noise);
    }
    return report;
  }

  // Build every survivor's clipped noisy vector, then mask and sum.
  std::vector<std::vector<uint64_t>> noisy(
      k, std::vector<uint64_t>(num_slots, 0));
  for (int a = 0; a < k; ++a) {
    const int i = survivors[a];
    RngStream rng(DeriveSeed(spec.shard_seed, engine::kSaltClientData, i));
    rng.NextBernoulli(spec.dropout_rate);
    std::vector<int64_t> vec(num_slots, 0);
    engine::AddRoundedVotes(clients[i], rng, vec);
    if (spec.params.beta > 0) {
      for (int j = 0; j < num_slots; ++j) {
        vec[j] += noise::NoiseShare(spec.params, rng);
      }
    }
    for (int j = 0; j < num_slots; ++j) noisy[a][j] = m.EncodeSigned(vec[j]);
  }

  std::vector<std::vector<uint64_t>> masks;
  if (spec.simulate_masks) {
    RngStream mask_rng(DeriveSeed(spec.shard_seed, engine::kSaltShardMask));
    masks = secagg::ZeroSumMasks(k, num_slots, m, mask_rng);
  }
  for (int a = 0; a < k; ++a) {
    for (int j = 0; j < num_slots; ++j) {
      uint64_t entry = noisy[a][j];
      if (spec.simulate_masks) entry = m.Reduce(entry + masks[a][j]);
      report.sum[j] = m.Reduce(report.sum[j] + entry);
    }
  }
  return report;
}

}  // namespace reference
}  // namespace geohist
