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

#ifndef GEOHIST_PROTOCOL_H_
#define GEOHIST_PROTOCOL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geohist/dataset.h"
#include "geohist/engine.h"
#include "geohist/noise.h"
#include "geohist/secagg.h"
#include "geohist/tree.h"
#include "geohist/user.h"

namespace geohist {
namespace protocol {

// Which factor Eq-style target noise uses for multi-shard accumulation:
// kPaper is the formula as written, sqrt(ceil(S_max / U)); kShards uses
// sqrt(ceil(U / S_max)), the number of shards actually summed.
enum class VarianceFactor { kPaper, kShards };

struct RunConfig {
  double eps_total = 1.0;
  int users_per_query = 10000;  // U
  secagg::ShardConfig shard;    // S_max, modulus bits, dropout rate
  double calibration_c = 0.1;
  double split_k = 2.0;         // split threshold in target-noise stddevs
  double expansion_b = 2.0;     // budget reserve factor for follow-up queries
  int64_t gamma_scale = 10000;  // multi-location scaling constant
  int max_subqueries = 15;      // safety cap; guarantees termination
  bool multi_location = false;
  bool noise_disabled = false;  // infinite-budget proxy: beta = 0 everywhere
  VarianceFactor variance_factor = VarianceFactor::kPaper;
  engine::NoiseMode noise_mode = engine::NoiseMode::kPerClient;
  bool simulate_masks = true;
  bool keep_samples = false;    // retain sampled user indices in results
  // Auxiliary-data mode: split a region when its proportion CI width is at
  // most aux_ci_split, collapse when it exceeds aux_ci_collapse.
  double aux_ci_split = 0.1;
  double aux_ci_collapse = 0.5;

  void Validate() const;
};

// One client's encoded, noised, modulo-clipped report for the given tree
// (single-location mode): a one-hot at the longest-prefix slot plus one noise
// share per entry. Locations are interpreted at side 2^max_depth.
std::vector<uint64_t> ClientUpdate(const UserRecord& user,
                                   const qtree::PrefixTree& tree,
                                   const noise::NoiseParams& params,
                                   const secagg::Modulus& m, RngStream& rng);

// Multi-location client report: weighted votes per slot, normalized to L1 1,
// scaled by gamma, stochastically rounded, noised, clipped. The pre-noise
// rounded vector always has L1 <= gamma + T.
std::vector<uint64_t> ClientUpdateMulti(const UserRecord& user,
                                        const qtree::PrefixTree& tree,
                                        const noise::NoiseParams& params,
                                        const secagg::Modulus& m,
                                        int64_t gamma, RngStream& rng);

struct ShardStats {
  int shards = 0;
  int failed_shards = 0;
  int contributors = 0;
  int dropped = 0;
};

struct HistogramResult {
  std::vector<double> counts;  // decoded per-slot sums (user units)
  qtree::DensityGrid grid;
  ShardStats stats;
  std::vector<int32_t> sampled_users;  // kept when config.keep_samples
};

struct VoteAggregate {
  std::vector<double> counts;
  ShardStats stats;
};

// Shard partitioning plus the secure-aggregation kernel over arbitrary
// prepared client votes on a num_slots-long vector; the building block shared
// by the adaptive protocol and the baselines. Noise parameters are calibrated
// per shard against its own admitted size, so a partial trailing shard still
// carries full noise.
VoteAggregate AggregateVotes(
    std::span<const std::vector<engine::ClientVote>> votes, int num_slots,
    double eps, int64_t delta, const RunConfig& config, uint64_t seed);

// One full histogram sub-query: samples users_per_query users without
// replacement, partitions them into ceil(U / S_max) disjoint shards, runs
// each shard through the secure-aggregation simulation, and sums the decoded
// shard reports. Multi-location counts are scaled back by gamma. A failed
// shard contributes nothing.
HistogramResult RunHistogram(const RunConfig& config, double eps,
                             const dataset::Population& pop,
                             const qtree::PrefixTree& tree, uint64_t seed);

// Target noise standard deviation for the next sub-query.
double TauTarget(double c, int users, int num_slots, int shard_size,
                 VarianceFactor factor = VarianceFactor::kPaper);

struct ScheduledEps {
  double eps = 0;
  bool final_subquery = false;
};

// Budget rule: spend eps(sigma_target) if b times that still fits in the
// remaining budget; otherwise spend the whole remainder and finish.
ScheduledEps ScheduleEps(const noise::PrivacyLedger& ledger,
                         double sigma_target, double b, int64_t delta);

// Splits accumulating nodes with count > threshold, collapses those with
// count <= threshold / 4 (the root never collapses; max-depth nodes never
// split). All decisions are evaluated against the pre-update tree.
qtree::PrefixTree UpdateTree(const qtree::PrefixTree& tree,
                             std::span<const double> counts, double threshold);

struct SubQueryRecord {
  int index = 0;
  double eps = 0;
  double sigma_target = 0;
  double threshold = 0;
  int num_slots = 0;
  bool final_subquery = false;
  std::vector<std::string> tree_nodes;  // bitstrings, root omitted
  std::vector<double> counts;
  ShardStats stats;
  std::vector<int32_t> sampled_users;  // kept when config.keep_samples
};

struct AdaptiveResult {
  std::vector<double> counts;   // final sub-query counts
  qtree::DensityGrid grid;      // final sub-query projection
  qtree::PrefixTree tree{0};    // partition the final counts were measured on
  std::vector<SubQueryRecord> log;
  double eps_spent = 0;
  double eps_remaining = 0;
  int64_t comm = 0;  // total per-client slots over all sub-queries
};

// The adaptive hierarchical histogram: sub-queries refine the tree until the
// budget runs out (or max_subqueries is hit). An initial tree can seed the
// run as an informative prior.
AdaptiveResult RunAdaptive(const RunConfig& config,
                           const dataset::Population& pop, uint64_t seed,
                           const qtree::PrefixTree* initial_tree = nullptr);

struct AuxRegion {
  std::string node;    // bitstring
  double total = 0;    // decoded user count
  double positives = 0;
  double proportion = 0;
  double ci_low = 0;
  double ci_high = 0;
};

struct AuxResult {
  std::vector<AuxRegion> regions;     // final sub-query, per slot
  qtree::DensityGrid proportion_map;  // per-cell proportion of its region
  qtree::PrefixTree tree{0};
  std::vector<SubQueryRecord> log;
  double eps_spent = 0;
  int64_t comm = 0;
};

// Proportion-estimation extension: every client reports a one-hot over 2T
// slots (region x aux bit), keeping sensitivity 1. Tree updates are driven by
// the width of the per-region Wald confidence interval, which accounts for
// both sampling and DP noise variance.
AuxResult RunAdaptiveAux(const RunConfig& config,
                         const dataset::Population& pop, uint64_t seed);

}  // namespace protocol
}  // namespace geohist

#endif  // GEOHIST_PROTOCOL_H_
