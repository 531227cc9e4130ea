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

#ifndef GEOHIST_BASELINES_H_
#define GEOHIST_BASELINES_H_

#include <cstdint>
#include <span>
#include <vector>

#include "geohist/dataset.h"
#include "geohist/protocol.h"
#include "geohist/tree.h"

namespace geohist {
namespace baselines {

struct SketchConfig {
  int width = 2000;
  int depth = 20;
  uint64_t hash_seed = 0;

  void Validate() const;
};

struct BaselineResult {
  qtree::DensityGrid grid;
  int64_t comm = 0;        // per-client vector slots
  double eps_spent = 0;
  protocol::ShardStats stats;
  int selected_depth = -1;            // non-private: best level
  std::vector<int> selected_levels;   // hierarchical/cm: level per quadrant
};

// Single sub-query at a fixed uniform resolution with the full budget.
BaselineResult FlatOneHot(const dataset::Population& pop, double eps_total,
                          int resolution_depth,
                          const protocol::RunConfig& config, uint64_t seed);

// One flat query per resolution level 1..levels with eps_total/levels each;
// for each level-1 quadrant the level with the lowest MSE against the ground
// truth is kept (evaluation-only oracle selection).
BaselineResult HierarchicalOneHot(const dataset::Population& pop,
                                  double eps_total, int levels,
                                  const qtree::DensityGrid& truth,
                                  const protocol::RunConfig& config,
                                  uint64_t seed);

// Deterministic per-row cell hash for the count-min sketch.
uint32_t CmHash(uint64_t hash_seed, int row, const qtree::NodeId& node,
                int width);

// Client-side sketch report: each prefix increments one cell per row, every
// cell gets a noise share, entries are modulo clipped. Noise parameters must
// be built with sensitivity depth * levels.
std::vector<std::vector<uint64_t>> CmSketchEncode(
    std::span<const qtree::NodeId> prefixes, const SketchConfig& sketch,
    const noise::NoiseParams& params, const secagg::Modulus& m,
    RngStream& rng);

// Count estimate for one node: the row-wise minimum of its decoded cells.
int64_t CmSketchDecode(std::span<const int64_t> decoded_cells,
                       const SketchConfig& sketch, const qtree::NodeId& node);

// Hierarchical encoding through one shared count-min sketch; level selection
// as in HierarchicalOneHot.
BaselineResult CmSketchBaseline(const dataset::Population& pop,
                                double eps_total, int levels,
                                const SketchConfig& sketch,
                                const qtree::DensityGrid& truth,
                                const protocol::RunConfig& config,
                                uint64_t seed);

// Two-stage adaptive grid: a uniform 10x10 query with eps*alpha, then each
// cell subdivided n x n with n = floor(sqrt(N' (1-alpha) eps / c2)) clamped
// to [1, cell side], measured with the remaining budget.
BaselineResult AdaptiveGrid(const dataset::Population& pop, double eps_total,
                            double alpha_share, double c2,
                            const protocol::RunConfig& config, uint64_t seed);

// Sampling-error floor: users report locations in the clear; the best
// uniform resolution against the ground truth is kept.
BaselineResult NonPrivate(const dataset::Population& pop,
                          const qtree::DensityGrid& truth,
                          const protocol::RunConfig& config, uint64_t seed);

}  // namespace baselines
}  // namespace geohist

#endif  // GEOHIST_BASELINES_H_
