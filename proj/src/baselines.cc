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

#include "geohist/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "geohist/metrics.h"
#include "geohist/reference.h"

namespace geohist {
namespace baselines {
namespace {

int Log2(int v) {
  int bits = 0;
  while ((1 << bits) < v) ++bits;
  return bits;
}

qtree::NodeId NodeFromMorton(uint64_t index, int depth) {
  qtree::NodeId node;
  for (int level = 0; level < depth; ++level) {
    node = node.Child(static_cast<int>(index >> (2 * (depth - 1 - level))) & 3);
  }
  return node;
}

// Morton slot of a location at the given depth: identical to the slot the
// fully split tree of that depth would assign (lexicographic layout order at
// one depth is Morton order).
int32_t MortonSlot(int x, int y, int depth, int side) {
  const int bits = Log2(side);
  uint64_t index = 0;
  for (int level = 0; level < depth; ++level) {
    const int pos = bits - 1 - level;
    index = index << 2 | ((x >> pos) & 1) << 1 | ((y >> pos) & 1);
  }
  return static_cast<int32_t>(index);
}

// Spreads per-node counts at one uniform depth over the full grid.
qtree::DensityGrid LevelGrid(std::span<const double> counts, int depth,
                             int side) {
  qtree::DensityGrid grid(side);
  const int extent = side >> depth;
  const double area = static_cast<double>(extent) * extent;
  const int64_t n = static_cast<int64_t>(counts.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const auto region = qtree::NodeRegion(NodeFromMorton(i, depth), side);
    const double value = counts[i] / area;
    for (int y = region.y0; y < region.y0 + extent; ++y) {
      double* row = grid.values.data() + static_cast<size_t>(y) * side;
      std::fill(row + region.x0, row + region.x0 + extent, value);
    }
  }
  return grid;
}

// Per level-1 quadrant, keeps the level whose normalized grid has the lowest
// squared error against the normalized truth.
struct QuadrantSelection {
  qtree::DensityGrid grid;
  std::vector<int> levels;
};

QuadrantSelection SelectPerQuadrant(
    const std::vector<qtree::DensityGrid>& level_grids,
    std::span<const int> level_depths, const qtree::DensityGrid& truth) {
  const int side = truth.side;
  const qtree::DensityGrid truth_norm = metrics::Normalized(truth);
  std::vector<qtree::DensityGrid> normalized;
  std::vector<bool> usable;
  for (const auto& g : level_grids) {
    if (g.Total() > 0) {
      normalized.push_back(metrics::Normalized(g));
      usable.push_back(true);
    } else {
      normalized.push_back(g);  // kept raw; only used if nothing else works
      usable.push_back(false);
    }
  }
  QuadrantSelection out;
  out.grid = qtree::DensityGrid(side);
  const int half = side / 2;
  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      double best = std::numeric_limits<double>::infinity();
      int best_level = 0;
      for (size_t l = 0; l < normalized.size(); ++l) {
        if (!usable[l]) continue;
        double err = 0;
        for (int y = qy * half; y < (qy + 1) * half; ++y) {
          for (int x = qx * half; x < (qx + 1) * half; ++x) {
            const double d = normalized[l].At(x, y) - truth_norm.At(x, y);
            err += d * d;
          }
        }
        if (err < best) {
          best = err;
          best_level = static_cast<int>(l);
        }
      }
      out.levels.push_back(level_depths[best_level]);
      for (int y = qy * half; y < (qy + 1) * half; ++y) {
        for (int x = qx * half; x < (qx + 1) * half; ++x) {
          out.grid.At(x, y) = normalized[best_level].At(x, y);
        }
      }
    }
  }
  return out;
}

std::vector<int32_t> SampleForRun(const dataset::Population& pop,
                                  const protocol::RunConfig& config,
                                  uint64_t seed) {
  RngStream rng(DeriveSeed(seed, engine::kSaltSample));
  return dataset::SampleUsers(pop, config.users_per_query, rng);
}

std::vector<double> AggregateSlotVotes(
    const std::vector<std::vector<engine::ClientVote>>& votes, int num_slots,
    double eps, int64_t delta, const protocol::RunConfig& config,
    uint64_t seed, protocol::ShardStats* stats) {
  auto agg = protocol::AggregateVotes(votes, num_slots, eps, delta, config,
                                      seed);
  stats->shards += agg.stats.shards;
  stats->failed_shards += agg.stats.failed_shards;
  stats->contributors += agg.stats.contributors;
  stats->dropped += agg.stats.dropped;
  return std::move(agg.counts);
}

}  // namespace

void SketchConfig::Validate() const {
  if (width < 1 || depth < 1) {
    throw std::invalid_argument("sketch width and depth must be >= 1");
  }
}

BaselineResult FlatOneHot(const dataset::Population& pop, double eps_total,
                          int resolution_depth,
                          const protocol::RunConfig& config, uint64_t seed) {
  config.Validate();
  const int max_depth = Log2(pop.side);
  if (resolution_depth < 0 || resolution_depth > max_depth) {
    throw std::invalid_argument("resolution_depth out of range");
  }
  noise::PrivacyLedger ledger(eps_total);
  ledger.Spend(eps_total);

  const auto sampled = SampleForRun(pop, config, seed);
  const int64_t num_slots = 1LL << (2 * resolution_depth);
  std::vector<std::vector<engine::ClientVote>> votes(sampled.size());
  for (size_t i = 0; i < sampled.size(); ++i) {
    const auto& loc = pop.users[sampled[i]].locations.front();
    votes[i] = {{MortonSlot(loc.x, loc.y, resolution_depth, pop.side), 1.0}};
  }

  BaselineResult result;
  const auto counts =
      AggregateSlotVotes(votes, static_cast<int>(num_slots), eps_total,
                         /*delta=*/1, config, seed, &result.stats);
  result.grid = LevelGrid(counts, resolution_depth, pop.side);
  result.comm = num_slots;
  result.eps_spent = ledger.SpentSum();
  return result;
}

BaselineResult HierarchicalOneHot(const dataset::Population& pop,
                                  double eps_total, int levels,
                                  const qtree::DensityGrid& truth,
                                  const protocol::RunConfig& config,
                                  uint64_t seed) {
  config.Validate();
  const int max_depth = Log2(pop.side);
  if (levels < 1 || levels > max_depth) {
    throw std::invalid_argument("levels out of range");
  }
  if (truth.side != pop.side) {
    throw std::invalid_argument("ground truth side mismatch");
  }
  noise::PrivacyLedger ledger(eps_total);
  const auto sampled = SampleForRun(pop, config, seed);

  BaselineResult result;
  std::vector<qtree::DensityGrid> level_grids;
  std::vector<int> level_depths;
  for (int depth = 1; depth <= levels; ++depth) {
    const double eps =
        depth < levels ? eps_total / levels : ledger.Remaining();
    ledger.Spend(eps);
    const int64_t num_slots = 1LL << (2 * depth);
    std::vector<std::vector<engine::ClientVote>> votes(sampled.size());
    for (size_t i = 0; i < sampled.size(); ++i) {
      const auto& loc = pop.users[sampled[i]].locations.front();
      votes[i] = {{MortonSlot(loc.x, loc.y, depth, pop.side), 1.0}};
    }
    const auto counts = AggregateSlotVotes(
        votes, static_cast<int>(num_slots), eps, /*delta=*/1, config,
        DeriveSeed(seed, engine::kSaltSubquery, static_cast<uint64_t>(depth)),
        &result.stats);
    level_grids.push_back(LevelGrid(counts, depth, pop.side));
    level_depths.push_back(depth);
    result.comm += num_slots;
  }

  auto selection = SelectPerQuadrant(level_grids, level_depths, truth);
  result.grid = std::move(selection.grid);
  result.selected_levels = std::move(selection.levels);
  result.eps_spent = ledger.SpentSum();
  return result;
}

uint32_t CmHash(uint64_t hash_seed, int row, const qtree::NodeId& node,
                int width) {
  uint64_t h = DeriveSeed(hash_seed, static_cast<uint64_t>(row),
                          static_cast<uint64_t>(node.depth()));
  uint64_t path = 0;
  for (int level = 0; level < node.depth(); ++level) {
    path = path << 2 | static_cast<uint64_t>(node.Code(level));
  }
  h = Mix64(h ^ path);
  return static_cast<uint32_t>(h % static_cast<uint64_t>(width));
}

std::vector<std::vector<uint64_t>> CmSketchEncode(
    std::span<const qtree::NodeId> prefixes, const SketchConfig& sketch,
    const noise::NoiseParams& params, const secagg::Modulus& m,
    RngStream& rng) {
  sketch.Validate();
  if (params.sensitivity !=
      static_cast<int64_t>(sketch.depth) *
          static_cast<int64_t>(prefixes.size())) {
    throw std::invalid_argument(
        "sketch noise sensitivity must be depth * levels");
  }
  std::vector<std::vector<int64_t>> cells(
      sketch.depth, std::vector<int64_t>(sketch.width, 0));
  for (const auto& prefix : prefixes) {
    for (int row = 0; row < sketch.depth; ++row) {
      ++cells[row][CmHash(sketch.hash_seed, row, prefix, sketch.width)];
    }
  }
  std::vector<std::vector<uint64_t>> out(
      sketch.depth, std::vector<uint64_t>(sketch.width));
  for (int row = 0; row < sketch.depth; ++row) {
    for (int col = 0; col < sketch.width; ++col) {
      int64_t value = cells[row][col];
      if (params.beta > 0) value += noise::NoiseShare(params, rng);
      out[row][col] = m.EncodeSigned(value);
    }
  }
  return out;
}

int64_t CmSketchDecode(std::span<const int64_t> decoded_cells,
                       const SketchConfig& sketch, const qtree::NodeId& node) {
  int64_t best = std::numeric_limits<int64_t>::max();
  for (int row = 0; row < sketch.depth; ++row) {
    const int64_t cell =
        decoded_cells[static_cast<size_t>(row) * sketch.width +
                      CmHash(sketch.hash_seed, row, node, sketch.width)];
    best = std::min(best, cell);
  }
  return best;
}

BaselineResult CmSketchBaseline(const dataset::Population& pop,
                                double eps_total, int levels,
                                const SketchConfig& sketch,
                                const qtree::DensityGrid& truth,
                                const protocol::RunConfig& config,
                                uint64_t seed) {
  config.Validate();
  sketch.Validate();
  const int max_depth = Log2(pop.side);
  if (levels < 1 || levels > max_depth) {
    throw std::invalid_argument("levels out of range");
  }
  noise::PrivacyLedger ledger(eps_total);
  ledger.Spend(eps_total);
  const auto sampled = SampleForRun(pop, config, seed);

  // One shared sketch; every client reports each of its `levels` prefixes
  // into every row, so the report's L1 sensitivity is depth * levels.
  const int num_slots = sketch.depth * sketch.width;
  std::vector<std::vector<engine::ClientVote>> votes(sampled.size());
  for (size_t i = 0; i < sampled.size(); ++i) {
    const auto& loc = pop.users[sampled[i]].locations.front();
    auto& user_votes = votes[i];
    user_votes.reserve(static_cast<size_t>(levels) * sketch.depth);
    for (int depth = 1; depth <= levels; ++depth) {
      const auto node = qtree::EncodeLocation(loc.x, loc.y, depth, pop.side);
      for (int row = 0; row < sketch.depth; ++row) {
        const int32_t slot =
            row * sketch.width +
            static_cast<int32_t>(CmHash(sketch.hash_seed, row, node,
                                        sketch.width));
        user_votes.push_back({slot, 1.0});
      }
    }
  }

  BaselineResult result;
  const int64_t delta =
      static_cast<int64_t>(sketch.depth) * static_cast<int64_t>(levels);
  const auto counts = AggregateSlotVotes(votes, num_slots, eps_total, delta,
                                         config, seed, &result.stats);
  std::vector<int64_t> decoded(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) {
    decoded[i] = static_cast<int64_t>(std::llround(counts[i]));
  }

  std::vector<qtree::DensityGrid> level_grids;
  std::vector<int> level_depths;
  for (int depth = 1; depth <= levels; ++depth) {
    const int64_t nodes = 1LL << (2 * depth);
    std::vector<double> node_counts(nodes);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nodes; ++i) {
      node_counts[i] = static_cast<double>(
          CmSketchDecode(decoded, sketch, NodeFromMorton(i, depth)));
    }
    level_grids.push_back(LevelGrid(node_counts, depth, pop.side));
    level_depths.push_back(depth);
  }

  auto selection = SelectPerQuadrant(level_grids, level_depths, truth);
  result.grid = std::move(selection.grid);
  result.selected_levels = std::move(selection.levels);
  result.comm = num_slots;
  result.eps_spent = ledger.SpentSum();
  return result;
}

BaselineResult AdaptiveGrid(const dataset::Population& pop, double eps_total,
                            double alpha_share, double c2,
                            const protocol::RunConfig& config, uint64_t seed) {
  config.Validate();
  if (!(alpha_share > 0) || !(alpha_share < 1)) {
    throw std::invalid_argument("alpha_share must be in (0, 1)");
  }
  if (!(c2 > 0)) throw std::invalid_argument("c2 must be > 0");
  const int side = pop.side;
  constexpr int kGrid = 10;
  // Pixel x belongs to coarse cell floor(x * kGrid / side); CellStart is the
  // matching inverse boundary.
  auto cell_of = [side](int v) {
    return static_cast<int>(static_cast<int64_t>(v) * kGrid / side);
  };
  auto cell_start = [side](int c) { return (c * side + kGrid - 1) / kGrid; };

  noise::PrivacyLedger ledger(eps_total);
  BaselineResult result;

  // Stage 1: uniform 10x10 counts.
  const double eps1 = alpha_share * eps_total;
  ledger.Spend(eps1);
  const auto sampled1 = SampleForRun(pop, config, seed);
  std::vector<std::vector<engine::ClientVote>> votes(sampled1.size());
  for (size_t i = 0; i < sampled1.size(); ++i) {
    const auto& loc = pop.users[sampled1[i]].locations.front();
    votes[i] = {{cell_of(loc.y) * kGrid + cell_of(loc.x), 1.0}};
  }
  const auto stage1 =
      AggregateSlotVotes(votes, kGrid * kGrid, eps1, /*delta=*/1, config,
                         DeriveSeed(seed, engine::kSaltSubquery, 1),
                         &result.stats);

  // Stage 2: per-cell n x n subdivision driven by the stage-1 counts.
  std::vector<int> subdiv(kGrid * kGrid, 1);
  std::vector<int> offset(kGrid * kGrid + 1, 0);
  for (int c = 0; c < kGrid * kGrid; ++c) {
    const int cy = c / kGrid, cx = c % kGrid;
    const int ext = std::min(cell_start(cx + 1) - cell_start(cx),
                             cell_start(cy + 1) - cell_start(cy));
    const double decoded = std::max(stage1[c], 0.0);
    const int n = static_cast<int>(
        std::floor(std::sqrt(decoded * (1 - alpha_share) * eps_total / c2)));
    subdiv[c] = std::clamp(n, 1, std::max(1, ext));
    offset[c + 1] = offset[c] + subdiv[c] * subdiv[c];
  }
  const int num_slots2 = offset.back();

  auto subcell_slot = [&](int x, int y) {
    const int cx = cell_of(x), cy = cell_of(y);
    const int c = cy * kGrid + cx;
    const int n = subdiv[c];
    const int x0 = cell_start(cx), x1 = cell_start(cx + 1);
    const int y0 = cell_start(cy), y1 = cell_start(cy + 1);
    const int su = static_cast<int>(static_cast<int64_t>(x - x0) * n / (x1 - x0));
    const int sv = static_cast<int>(static_cast<int64_t>(y - y0) * n / (y1 - y0));
    return offset[c] + sv * n + su;
  };

  const double eps2 = ledger.Remaining();
  ledger.Spend(eps2);
  const auto sampled2 = SampleForRun(
      pop, config, DeriveSeed(seed, engine::kSaltSubquery, 2));
  std::vector<std::vector<engine::ClientVote>> votes2(sampled2.size());
  for (size_t i = 0; i < sampled2.size(); ++i) {
    const auto& loc = pop.users[sampled2[i]].locations.front();
    votes2[i] = {{subcell_slot(loc.x, loc.y), 1.0}};
  }
  const auto stage2 =
      AggregateSlotVotes(votes2, num_slots2, eps2, /*delta=*/1, config,
                         DeriveSeed(seed, engine::kSaltSubquery, 2),
                         &result.stats);

  // Project: each subcell's count spread over its own pixels.
  std::vector<int64_t> area(num_slots2, 0);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) ++area[subcell_slot(x, y)];
  }
  result.grid = qtree::DensityGrid(side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int slot = subcell_slot(x, y);
      result.grid.At(x, y) = stage2[slot] / static_cast<double>(area[slot]);
    }
  }
  result.comm = kGrid * kGrid + num_slots2;
  result.eps_spent = ledger.SpentSum();
  return result;
}

BaselineResult NonPrivate(const dataset::Population& pop,
                          const qtree::DensityGrid& truth,
                          const protocol::RunConfig& config, uint64_t seed) {
  config.Validate();
  if (truth.side != pop.side) {
    throw std::invalid_argument("ground truth side mismatch");
  }
  const int side = pop.side;
  const int max_depth = Log2(side);
  const auto sampled = SampleForRun(pop, config, seed);
  const auto raster = reference::ExactRaster(pop, sampled);

  // Block-sum pyramid: level d holds 2^d x 2^d per-region sums.
  std::vector<qtree::DensityGrid> sums(max_depth + 1);
  sums[max_depth] = raster;
  for (int d = max_depth - 1; d >= 0; --d) {
    const int n = 1 << d;
    sums[d] = qtree::DensityGrid(n);
    const auto& fine = sums[d + 1];
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        sums[d].At(x, y) = fine.At(2 * x, 2 * y) + fine.At(2 * x + 1, 2 * y) +
                           fine.At(2 * x, 2 * y + 1) +
                           fine.At(2 * x + 1, 2 * y + 1);
      }
    }
  }

  BaselineResult result;
  double best = std::numeric_limits<double>::infinity();
  for (int d = 0; d <= max_depth; ++d) {
    const int extent = side >> d;
    const double area = static_cast<double>(extent) * extent;
    qtree::DensityGrid spread(side);
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        spread.At(x, y) = sums[d].At(x / extent, y / extent) / area;
      }
    }
    const double err = metrics::Mse(spread, truth);
    if (err < best) {
      best = err;
      result.grid = std::move(spread);
      result.selected_depth = d;
    }
  }
  result.comm = 2;
  result.eps_spent = 0;
  return result;
}

}  // namespace baselines
}  // namespace geohist
