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

#ifndef GEOHIST_REFERENCE_H_
#define GEOHIST_REFERENCE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "geohist/dataset.h"
#include "geohist/tree.h"

// Serial reference implementations kept as testing oracles for the
// OpenMP kernels. These favor obviousness over speed.
namespace geohist {
namespace reference {

// Per-coordinate projection: every cell asks for its longest-prefix slot and
// takes an equal share of that slot's value.
qtree::DensityGrid ProjectToMapSerial(const qtree::PrefixTree& tree,
                                      std::span<const double> counts,
                                      int side);

// Noise-free histogram: exact per-slot counts of the given users' first
// locations (single-location semantics).
std::vector<double> ExactSlotCounts(const dataset::Population& pop,
                                    std::span<const int32_t> user_indices,
                                    const qtree::PrefixTree& tree);

// Exact rasterization of the given users at the finest resolution.
qtree::DensityGrid ExactRaster(const dataset::Population& pop,
                               std::span<const int32_t> user_indices);

}  // namespace reference
}  // namespace geohist

#endif  // GEOHIST_REFERENCE_H_
