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

#include "geohist/reference.h"

#include <stdexcept>

namespace geohist {
namespace reference {
namespace {

int Log2(int v) {
  int bits = 0;
  while ((1 << bits) < v) ++bits;
  return bits;
}

}  // namespace

qtree::DensityGrid ProjectToMapSerial(const qtree::PrefixTree& tree,
                                      std::span<const double> counts,
                                      int side) {
  if (static_cast<int>(counts.size()) != tree.NumSlots()) {
    throw std::invalid_argument("counts length must equal layout size");
  }
  const int depth = std::min(tree.max_depth(), Log2(side));
  std::vector<int32_t> slot_of_cell(static_cast<size_t>(side) * side);
  std::vector<int64_t> owned(tree.NumSlots(), 0);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int slot =
          tree.LongestPrefixSlot(qtree::EncodeLocation(x, y, depth, side));
      slot_of_cell[static_cast<size_t>(y) * side + x] = slot;
      ++owned[slot];
    }
  }
  qtree::DensityGrid grid(side);
  for (size_t i = 0; i < slot_of_cell.size(); ++i) {
    const int slot = slot_of_cell[i];
    grid.values[i] = counts[slot] / static_cast<double>(owned[slot]);
  }
  return grid;
}

std::vector<double> ExactSlotCounts(const dataset::Population& pop,
                                    std::span<const int32_t> user_indices,
                                    const qtree::PrefixTree& tree) {
  std::vector<double> counts(tree.NumSlots(), 0.0);
  for (int32_t idx : user_indices) {
    const auto& loc = pop.users[idx].locations.front();
    const int slot = tree.LongestPrefixSlot(
        qtree::EncodeLocation(loc.x, loc.y, tree.max_depth(), pop.side));
    counts[slot] += 1.0;
  }
  return counts;
}

qtree::DensityGrid ExactRaster(const dataset::Population& pop,
                               std::span<const int32_t> user_indices) {
  qtree::DensityGrid grid(pop.side);
  for (int32_t idx : user_indices) {
    const auto& user = pop.users[idx];
    double total = 0;
    for (const auto& loc : user.locations) total += loc.weight;
    for (const auto& loc : user.locations) {
      grid.At(loc.x, loc.y) += loc.weight / total;
    }
  }
  return grid;
}

}  // namespace reference
}  // namespace geohist
