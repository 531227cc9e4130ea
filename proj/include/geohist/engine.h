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

#ifndef GEOHIST_ENGINE_H_
#define GEOHIST_ENGINE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geohist/noise.h"
#include "geohist/rng.h"
#include "geohist/secagg.h"

namespace geohist {
namespace engine {

// How DP noise is drawn inside a shard.
//
// kPerClient is the protocol as deployed: every client adds one noise share
// per vector entry. kAggregated draws the whole shard's noise once per entry
// from Polya(survivors * alpha, beta) differences, which is the exact
// distribution of the per-client sum (negative binomials add in the shape
// parameter) at a fraction of the cost; it makes very wide vectors (flat and
// hierarchical baselines) tractable. Modulo clipping commutes with the
// modular sum, so the two modes produce identically distributed reports.
enum class NoiseMode { kPerClient, kAggregated };

// One client's pre-noise contribution as sparse scaled votes. Values must be
// nonnegative; non-integer values are stochastically rounded (up with
// probability equal to the fractional part) with the client's own stream.
struct ClientVote {
  int32_t slot = 0;
  double value = 1.0;
};

struct ShardSpec {
  int num_slots = 1;
  noise::NoiseParams params;
  int modulus_bits = 32;
  double dropout_rate = 0.0;
  uint64_t shard_seed = 0;
  NoiseMode noise_mode = NoiseMode::kPerClient;
  // Materialize zero-sum masks (per-client mode). The masked and unmasked
  // modular sums are equal, so this only affects which random words get
  // generated, never the report.
  bool simulate_masks = true;
};

// Stream-derivation salts. Every unit of work owns a stream keyed by its
// position so evaluation order never changes results.
enum Salt : uint64_t {
  kSaltClientData = 1,  // dropout, stochastic rounding, per-client noise
  kSaltClientMask = 2,  // per-client chain masks
  kSaltShardMask = 3,   // reference impl's textbook zero-sum masks
  kSaltSlotNoise = 4,   // aggregated-mode per-slot noise
  kSaltSample = 5,      // per-sub-query user sampling
  kSaltShard = 6,       // per-shard seeds
  kSaltSubquery = 7,    // per-sub-query seeds
  kSaltRun = 8,         // per-run seeds (CLI repeats)
};

// Simulates one secure-aggregation shard end to end: per-client dropout,
// vote rounding, noise shares, masking, and the modular sum. OpenMP-parallel
// over clients (per-client mode) or slots (aggregated mode); bit-identical
// to reference::RunShardSerial for any thread count. Returns nullopt when
// half or more of the admitted clients drop.
std::optional<secagg::ShardReport> RunShard(
    std::span<const std::vector<ClientVote>> clients, const ShardSpec& spec);

// Consumes the survivor decision and rounding draws for one client, adding
// rounded votes into `dense`. Returns the rounded L1. Shared between the
// parallel kernel and the serial reference so their streams stay aligned.
int64_t AddRoundedVotes(std::span<const ClientVote> votes, RngStream& rng,
                        std::span<int64_t> dense);

}  // namespace engine

namespace reference {

// Straight-line serial implementation of engine::RunShard, kept as the
// testing oracle: it materializes every survivor's noisy vector and a
// textbook zero-sum mask set, then folds the masked vectors together.
std::optional<secagg::ShardReport> RunShardSerial(
    std::span<const std::vector<engine::ClientVote>> clients,
    const engine::ShardSpec& spec);

}  // namespace reference
}  // namespace geohist

#endif  // GEOHIST_ENGINE_H_
