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
#include <stdexcept>

namespace geohist {
namespace protocol {
namespace {

constexpr double kZ95 = 1.959963984540054;

int Log2(int v) {
  int bits = 0;
  while ((1 << bits) < v) ++bits;
  return bits;
}

void CheckTreeMatchesPopulation(const qtree::PrefixTree& tree,
                                const dataset::Population& pop) {
  if ((1 << tree.max_depth()) != pop.side) {
    throw std::invalid_argument(
        "tree max_depth must equal log2 of the population grid side");
  }
}

int LocationSlot(const qtree::PrefixTree& tree, int x, int y, int side) {
  return tree.LongestPrefixSlot(
      qtree::EncodeLocation(x, y, tree.max_depth(), side));
}

// Weighted per-slot votes, normalized to L1 = 1 and scaled by gamma.
// Sorted by slot so stochastic rounding consumes draws in a fixed order.
std::vector<engine::ClientVote> MultiLocationVotes(
    const UserRecord& user, const qtree::PrefixTree& tree, int side,
    int64_t gamma) {
  if (user.locations.empty()) {
    throw std::invalid_argument("user has no locations");
  }
  std::vector<engine::ClientVote> votes;
  double total_weight = 0;
  for (const auto& loc : user.locations) {
    if (!(loc.weight > 0)) {
      throw std::invalid_argument("location weights must be positive");
    }
    total_weight += loc.weight;
  }
  for (const auto& loc : user.locations) {
    const int slot = LocationSlot(tree, loc.x, loc.y, side);
    bool merged = false;
    for (auto& vote : votes) {
      if (vote.slot == slot) {
        vote.value += loc.weight;
        merged = true;
        break;
      }
    }
    if (!merged) votes.push_back({slot, loc.weight});
  }
  std::sort(votes.begin(), votes.end(),
            [](const auto& a, const auto& b) { return a.slot < b.slot; });
  for (auto& vote : votes) {
    vote.value = vote.value / total_weight * static_cast<double>(gamma);
  }
  return votes;
}

std::vector<std::string> TreeStrings(const qtree::PrefixTree& tree) {
  std::vector<std::string> out;
  out.reserve(tree.nodes().size() - 1);
  for (const auto& node : tree.nodes()) {
    if (!node.IsRoot()) out.push_back(node.ToString());
  }
  return out;
}

}  // namespace

VoteAggregate AggregateVotes(
    std::span<const std::vector<engine::ClientVote>> votes, int num_slots,
    double eps, int64_t delta, const RunConfig& config, uint64_t seed) {
  const int n = static_cast<int>(votes.size());
  const int shard_size = config.shard.shard_size;
  const int num_shards = (n + shard_size - 1) / shard_size;

  VoteAggregate out;
  out.counts.assign(num_slots, 0.0);
  for (int r = 0; r < num_shards; ++r) {
    const int begin = r * shard_size;
    const int end = std::min(n, begin + shard_size);

    engine::ShardSpec spec;
    spec.num_slots = num_slots;
    spec.params =
        noise::ShardNoiseParams(eps, delta, end - begin,
                                config.shard.dropout_rate);
    if (config.noise_disabled) spec.params.beta = 0;
    spec.modulus_bits = config.shard.modulus_bits;
    spec.dropout_rate = config.shard.dropout_rate;
    spec.shard_seed = DeriveSeed(seed, engine::kSaltShard, r);
    spec.noise_mode = config.noise_mode;
    spec.simulate_masks = config.simulate_masks;

    auto report = engine::RunShard(votes.subspan(begin, end - begin), spec);
    ++out.stats.shards;
    if (!report.has_value()) {
      ++out.stats.failed_shards;
      continue;  // the server sees nothing from a failed shard
    }
    out.stats.contributors += report->contributors;
    out.stats.dropped += report->dropped;
    const secagg::Modulus m(config.shard.modulus_bits);
    for (int j = 0; j < num_slots; ++j) {
      out.counts[j] += static_cast<double>(m.DecodeSigned(report->sum[j]));
    }
  }
  return out;
}

void RunConfig::Validate() const {
  if (!(eps_total > 0)) throw std::invalid_argument("eps_total must be > 0");
  if (users_per_query < 1) {
    throw std::invalid_argument("users_per_query must be >= 1");
  }
  shard.Validate();
  if (!(calibration_c > 0)) throw std::invalid_argument("c must be > 0");
  if (!(split_k > 0)) throw std::invalid_argument("k must be > 0");
  if (!(expansion_b > 0)) throw std::invalid_argument("b must be > 0");
  if (gamma_scale < 1) throw std::invalid_argument("gamma must be >= 1");
  if (max_subqueries < 1) {
    throw std::invalid_argument("max_subqueries must be >= 1");
  }
  if (!(aux_ci_split > 0) || !(aux_ci_collapse > aux_ci_split)) {
    throw std::invalid_argument("need 0 < aux_ci_split < aux_ci_collapse");
  }
}

std::vector<uint64_t> ClientUpdate(const UserRecord& user,
                                   const qtree::PrefixTree& tree,
                                   const noise::NoiseParams& params,
                                   const secagg::Modulus& m, RngStream& rng) {
  if (user.locations.empty()) {
    throw std::invalid_argument("user has no locations");
  }
  const int side = 1 << tree.max_depth();
  const auto& loc = user.locations.front();
  const int slot = LocationSlot(tree, loc.x, loc.y, side);
  const int num_slots = tree.NumSlots();
  std::vector<uint64_t> vec(num_slots);
  for (int j = 0; j < num_slots; ++j) {
    int64_t value = (j == slot) ? 1 : 0;
    if (params.beta > 0) value += noise::NoiseShare(params, rng);
    vec[j] = m.EncodeSigned(value);
  }
  return vec;
}

std::vector<uint64_t> ClientUpdateMulti(const UserRecord& user,
                                        const qtree::PrefixTree& tree,
                                        const noise::NoiseParams& params,
                                        const secagg::Modulus& m,
                                        int64_t gamma, RngStream& rng) {
  const int side = 1 << tree.max_depth();
  const int num_slots = tree.NumSlots();
  const auto votes = MultiLocationVotes(user, tree, side, gamma);
  std::vector<int64_t> dense(num_slots, 0);
  const int64_t l1 = engine::AddRoundedVotes(votes, rng, dense);
  if (l1 > gamma + num_slots) {
    throw std::logic_error("rounded vector exceeded the L1 bound");
  }
  std::vector<uint64_t> vec(num_slots);
  for (int j = 0; j < num_slots; ++j) {
    int64_t value = dense[j];
    if (params.beta > 0) value += noise::NoiseShare(params, rng);
    vec[j] = m.EncodeSigned(value);
  }
  return vec;
}

HistogramResult RunHistogram(const RunConfig& config, double eps,
                             const dataset::Population& pop,
                             const qtree::PrefixTree& tree, uint64_t seed) {
  config.Validate();
  CheckTreeMatchesPopulation(tree, pop);
  if (!(eps > 0)) throw std::invalid_argument("eps must be > 0");
  const int num_slots = tree.NumSlots();
  const int users = config.users_per_query;

  RngStream sample_rng(DeriveSeed(seed, engine::kSaltSample));
  const auto sampled = dataset::SampleUsers(pop, users, sample_rng);

  std::vector<std::vector<engine::ClientVote>> votes(sampled.size());
  if (config.multi_location) {
    for (size_t i = 0; i < sampled.size(); ++i) {
      votes[i] = MultiLocationVotes(pop.users[sampled[i]], tree, pop.side,
                                    config.gamma_scale);
    }
  } else {
#pragma omp parallel for schedule(static)
    for (size_t i = 0; i < sampled.size(); ++i) {
      const auto& loc = pop.users[sampled[i]].locations.front();
      votes[i] = {{LocationSlot(tree, loc.x, loc.y, pop.side), 1.0}};
    }
  }

  const int64_t delta =
      config.multi_location ? config.gamma_scale + num_slots : 1;
  auto aggregate = AggregateVotes(votes, num_slots, eps, delta, config, seed);

  HistogramResult result;
  result.stats = aggregate.stats;
  result.counts = std::move(aggregate.counts);
  if (config.multi_location) {
    for (double& c : result.counts) {
      c /= static_cast<double>(config.gamma_scale);
    }
  }
  result.grid = qtree::ProjectToMap(tree, result.counts, pop.side);
  if (config.keep_samples) result.sampled_users = sampled;
  return result;
}

double TauTarget(double c, int users, int num_slots, int shard_size,
                 VarianceFactor factor) {
  if (!(c > 0) || users < 1 || num_slots < 1 || shard_size < 1) {
    throw std::invalid_argument("TauTarget arguments must be positive");
  }
  const int64_t numer =
      factor == VarianceFactor::kPaper ? shard_size : users;
  const int64_t denom =
      factor == VarianceFactor::kPaper ? users : shard_size;
  const auto ratio = static_cast<double>((numer + denom - 1) / denom);
  return c * (static_cast<double>(users) / num_slots) * std::sqrt(ratio);
}

ScheduledEps ScheduleEps(const noise::PrivacyLedger& ledger,
                         double sigma_target, double b, int64_t delta) {
  const double remaining = ledger.Remaining();
  if (!(remaining > 0)) {
    throw std::invalid_argument("no budget remaining to schedule");
  }
  const double eps = noise::EpsFromSigma(sigma_target, delta);
  if (eps >= remaining) return {remaining, true};
  if (b * eps <= remaining) return {eps, false};
  return {remaining, true};
}

qtree::PrefixTree UpdateTree(const qtree::PrefixTree& tree,
                             std::span<const double> counts,
                             double threshold) {
  if (static_cast<int>(counts.size()) != tree.NumSlots()) {
    throw std::invalid_argument("counts length must equal layout size");
  }
  std::vector<qtree::NodeId> splits;
  std::vector<qtree::NodeId> collapses;
  for (int slot = 0; slot < tree.NumSlots(); ++slot) {
    const qtree::NodeId& node = tree.SlotNode(slot);
    const double count = counts[slot];
    if (count > threshold && node.depth() < tree.max_depth()) {
      splits.push_back(node);
    }
    if (count <= threshold / 4 && !node.IsRoot()) {
      collapses.push_back(node);
    }
  }
  return tree.Apply(splits, collapses);
}

AdaptiveResult RunAdaptive(const RunConfig& config,
                           const dataset::Population& pop, uint64_t seed,
                           const qtree::PrefixTree* initial_tree) {
  config.Validate();
  const int max_depth = Log2(pop.side);
  qtree::PrefixTree tree =
      initial_tree != nullptr ? *initial_tree : qtree::PrefixTree(max_depth);
  CheckTreeMatchesPopulation(tree, pop);

  noise::PrivacyLedger ledger(config.eps_total);
  AdaptiveResult result;
  result.tree = tree;

  // Once the partition stops changing there is nothing left to learn about
  // structure, so the next sub-query measures with the whole remainder. The
  // capped last round does the same, keeping the budget exactly exhausted at
  // termination.
  bool force_final = false;
  for (int q = 1; q <= config.max_subqueries; ++q) {
    if (!(ledger.Remaining() > 0)) break;
    const int num_slots = tree.NumSlots();
    const double sigma_user =
        TauTarget(config.calibration_c, config.users_per_query, num_slots,
                  config.shard.shard_size, config.variance_factor);
    const int64_t delta =
        config.multi_location ? config.gamma_scale + num_slots : 1;
    // Noise is applied to gamma-scaled votes in multi-location mode, so the
    // user-unit target scales up by gamma before budget conversion.
    const double sigma_scaled =
        config.multi_location
            ? sigma_user * static_cast<double>(config.gamma_scale)
            : sigma_user;
    const ScheduledEps sched =
        force_final || q == config.max_subqueries
            ? ScheduledEps{ledger.Remaining(), true}
            : ScheduleEps(ledger, sigma_scaled, config.expansion_b, delta);
    ledger.Spend(sched.eps);

    const auto hist = RunHistogram(config, sched.eps, pop, tree,
                                   DeriveSeed(seed, engine::kSaltSubquery,
                                              static_cast<uint64_t>(q)));

    SubQueryRecord record;
    record.index = q;
    record.eps = sched.eps;
    record.sigma_target = sigma_user;
    record.threshold = config.split_k * sigma_user;
    record.num_slots = num_slots;
    record.final_subquery = sched.final_subquery;
    record.tree_nodes = TreeStrings(tree);
    record.counts = hist.counts;
    record.stats = hist.stats;
    if (config.keep_samples) record.sampled_users = hist.sampled_users;
    result.log.push_back(std::move(record));
    result.comm += num_slots;

    result.counts = hist.counts;
    result.grid = hist.grid;
    result.tree = tree;
    if (sched.final_subquery) break;
    auto updated = UpdateTree(tree, hist.counts, config.split_k * sigma_user);
    if (updated == tree) {
      force_final = true;  // resolution converged; measure and stop
    } else {
      tree = std::move(updated);
    }
  }
  result.eps_spent = ledger.SpentSum();
  result.eps_remaining = ledger.Remaining();
  return result;
}

AuxResult RunAdaptiveAux(const RunConfig& config,
                         const dataset::Population& pop, uint64_t seed) {
  config.Validate();
  const int max_depth = Log2(pop.side);
  qtree::PrefixTree tree(max_depth);
  noise::PrivacyLedger ledger(config.eps_total);
  AuxResult result;
  result.tree = tree;

  bool force_final = false;
  for (int q = 1; q <= config.max_subqueries; ++q) {
    if (!(ledger.Remaining() > 0)) break;
    const int num_slots = tree.NumSlots();
    const double sigma_user =
        TauTarget(config.calibration_c, config.users_per_query, num_slots,
                  config.shard.shard_size, config.variance_factor);
    const ScheduledEps sched =
        force_final || q == config.max_subqueries
            ? ScheduledEps{ledger.Remaining(), true}
            : ScheduleEps(ledger, sigma_user, config.expansion_b,
                          /*delta=*/1);
    ledger.Spend(sched.eps);
    const uint64_t sub_seed =
        DeriveSeed(seed, engine::kSaltSubquery, static_cast<uint64_t>(q));

    RngStream sample_rng(DeriveSeed(sub_seed, engine::kSaltSample));
    const auto sampled =
        dataset::SampleUsers(pop, config.users_per_query, sample_rng);
    std::vector<std::vector<engine::ClientVote>> votes(sampled.size());
    for (size_t i = 0; i < sampled.size(); ++i) {
      const auto& user = pop.users[sampled[i]];
      if (!user.aux_bit.has_value()) {
        throw std::invalid_argument("sampled user is missing its aux bit");
      }
      const auto& loc = user.locations.front();
      const int slot = LocationSlot(tree, loc.x, loc.y, pop.side);
      votes[i] = {{2 * slot + (*user.aux_bit ? 1 : 0), 1.0}};
    }
    auto aggregate = AggregateVotes(votes, 2 * num_slots, sched.eps,
                                    /*delta=*/1, config, sub_seed);

    // Per-counter DP noise variance across the summed shards.
    const double sigma_dp =
        config.noise_disabled
            ? 0.0
            : noise::SigmaFromEps(sched.eps, 1) *
                  std::sqrt(static_cast<double>(aggregate.stats.shards));

    std::vector<AuxRegion> regions(num_slots);
    std::vector<qtree::NodeId> splits, collapses;
    std::vector<double> proportions(num_slots, 0.0);
    for (int slot = 0; slot < num_slots; ++slot) {
      const double negatives = aggregate.counts[2 * slot];
      const double positives = aggregate.counts[2 * slot + 1];
      const double total = negatives + positives;
      AuxRegion& region = regions[slot];
      region.node = tree.SlotNode(slot).ToString();
      region.total = total;
      region.positives = positives;
      double width;
      if (total > 0) {
        const double p = std::clamp(positives / total, 0.0, 1.0);
        const double variance =
            p * (1 - p) / total + 2 * sigma_dp * sigma_dp / (total * total);
        const double half = kZ95 * std::sqrt(std::max(variance, 0.0));
        region.proportion = p;
        region.ci_low = std::max(0.0, p - half);
        region.ci_high = std::min(1.0, p + half);
        width = 2 * half;
      } else {
        region.proportion = 0;
        region.ci_low = 0;
        region.ci_high = 1;
        width = 1;
      }
      proportions[slot] = region.proportion;
      const qtree::NodeId& node = tree.SlotNode(slot);
      if (total > 0 && width <= config.aux_ci_split &&
          node.depth() < tree.max_depth()) {
        splits.push_back(node);
      }
      if (width > config.aux_ci_collapse && !node.IsRoot()) {
        collapses.push_back(node);
      }
    }

    SubQueryRecord record;
    record.index = q;
    record.eps = sched.eps;
    record.sigma_target = sigma_user;
    record.num_slots = num_slots;
    record.final_subquery = sched.final_subquery;
    record.tree_nodes = TreeStrings(tree);
    record.counts = aggregate.counts;
    record.stats = aggregate.stats;
    result.log.push_back(std::move(record));
    result.comm += 2 * num_slots;

    result.regions = std::move(regions);
    result.tree = tree;
    // Proportions are intensive: every cell carries its region's value.
    const auto slot_map = tree.BuildSlotMap(pop.side);
    result.proportion_map = qtree::DensityGrid(pop.side);
    for (size_t i = 0; i < slot_map.size(); ++i) {
      result.proportion_map.values[i] = proportions[slot_map[i]];
    }
    if (sched.final_subquery) break;
    auto updated = tree.Apply(splits, collapses);
    if (updated == tree) {
      force_final = true;
    } else {
      tree = std::move(updated);
    }
  }
  result.eps_spent = ledger.SpentSum();
  return result;
}

}  // namespace protocol
}  // namespace geohist
