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

#include "geohist/tree.h"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace geohist {
namespace qtree {
namespace {

bool IsPowerOfTwo(int v) { return v > 0 && (v & (v - 1)) == 0; }

int Log2(int v) {
  int bits = 0;
  while ((1 << bits) < v) ++bits;
  return bits;
}

}  // namespace

std::string NodeId::ToString() const {
  std::string out;
  for (int level = 0; level < depth_; ++level) {
    if (level > 0) out.push_back(' ');
    const int code = Code(level);
    out.push_back((code & 2) ? '1' : '0');
    out.push_back((code & 1) ? '1' : '0');
  }
  return out;
}

NodeId NodeId::FromString(const std::string& text) {
  NodeId node;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    if (token.size() != 2 || (token[0] != '0' && token[0] != '1') ||
        (token[1] != '0' && token[1] != '1')) {
      throw std::invalid_argument("bad quadrant code: '" + token + "'");
    }
    if (node.depth() >= kMaxDepth) {
      throw std::invalid_argument("node id deeper than kMaxDepth");
    }
    node = node.Child((token[0] - '0') << 1 | (token[1] - '0'));
  }
  return node;
}

NodeId EncodeLocation(int x, int y, int depth, int side) {
  if (!IsPowerOfTwo(side)) {
    throw std::invalid_argument("side must be a power of two");
  }
  if (x < 0 || y < 0 || x >= side || y >= side) {
    throw std::invalid_argument("coordinates out of range");
  }
  const int bits = Log2(side);
  if (depth < 0 || depth > bits || depth > NodeId::kMaxDepth) {
    throw std::invalid_argument("depth out of range");
  }
  NodeId node;
  for (int level = 0; level < depth; ++level) {
    const int pos = bits - 1 - level;
    const int xb = (x >> pos) & 1;
    const int yb = (y >> pos) & 1;
    node = node.Child(xb << 1 | yb);
  }
  return node;
}

Region NodeRegion(const NodeId& node, int side) {
  Region region;
  region.extent = side;
  for (int level = 0; level < node.depth(); ++level) {
    region.extent >>= 1;
    const int code = node.Code(level);
    region.x0 += (code >> 1) * region.extent;
    region.y0 += (code & 1) * region.extent;
  }
  return region;
}

double DensityGrid::Total() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

PrefixTree::PrefixTree(int max_depth) : max_depth_(max_depth) {
  if (max_depth < 0 || max_depth > NodeId::kMaxDepth) {
    throw std::invalid_argument("max_depth out of range");
  }
  nodes_.push_back(NodeId());
  layout_.push_back(NodeId());
}

PrefixTree PrefixTree::Uniform(int depth, int max_depth) {
  if (depth < 0 || depth > max_depth) {
    throw std::invalid_argument("uniform depth out of range");
  }
  PrefixTree tree(max_depth);
  tree.nodes_.clear();
  std::vector<NodeId> level{NodeId()};
  tree.nodes_.push_back(NodeId());
  for (int d = 0; d < depth; ++d) {
    std::vector<NodeId> next;
    next.reserve(level.size() * 4);
    for (const NodeId& node : level) {
      for (int code = 0; code < 4; ++code) next.push_back(node.Child(code));
    }
    tree.nodes_.insert(tree.nodes_.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::sort(tree.nodes_.begin(), tree.nodes_.end());
  // Interior nodes all have four children; the layout is exactly the deepest
  // level, already sorted.
  std::sort(level.begin(), level.end());
  tree.layout_ = std::move(level);
  tree.deepest_depth_ = depth;
  return tree;
}

PrefixTree PrefixTree::FromNodes(std::vector<NodeId> nodes, int max_depth) {
  PrefixTree tree(max_depth);
  nodes.push_back(NodeId());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (const NodeId& node : nodes) {
    if (node.depth() > max_depth) {
      throw std::invalid_argument("node deeper than max_depth");
    }
  }
  tree.nodes_ = std::move(nodes);
  tree.RebuildLayout();
  return tree;
}

bool PrefixTree::Contains(const NodeId& node) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), node);
}

bool PrefixTree::Accumulates(const NodeId& node) const {
  if (!Contains(node)) return false;
  if (node.depth() == max_depth_) return true;
  int present = 0;
  for (int code = 0; code < 4; ++code) {
    present += Contains(node.Child(code)) ? 1 : 0;
  }
  return present < 4;
}

int PrefixTree::SlotOf(const NodeId& node) const {
  auto it = std::lower_bound(layout_.begin(), layout_.end(), node);
  if (it == layout_.end() || *it != node) return -1;
  return static_cast<int>(it - layout_.begin());
}

int PrefixTree::LongestPrefixSlot(const NodeId& leaf) const {
  for (int depth = leaf.depth(); depth >= 0; --depth) {
    const NodeId prefix = leaf.Prefix(depth);
    if (Contains(prefix)) {
      // The deepest present prefix always accumulates: if it had four
      // children, one of them would be a deeper present prefix.
      return SlotOf(prefix);
    }
  }
  return 0;  // unreachable: root is always present
}

bool PrefixTree::SubtreeNonEmpty(const NodeId& node) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
  return it != nodes_.end() && node.IsPrefixOf(*it);
}

PrefixTree PrefixTree::Split(const NodeId& node) const {
  if (!Contains(node) || node.depth() >= max_depth_) return *this;
  return Apply({&node, 1}, {});
}

PrefixTree PrefixTree::Collapse(const NodeId& node) const {
  if (node.IsRoot()) throw std::invalid_argument("cannot collapse the root");
  if (!Contains(node)) return *this;
  return Apply({}, {&node, 1});
}

PrefixTree PrefixTree::Apply(std::span<const NodeId> splits,
                             std::span<const NodeId> collapses) const {
  std::vector<NodeId> nodes = nodes_;
  for (const NodeId& node : splits) {
    if (node.depth() >= max_depth_) continue;
    for (int code = 0; code < 4; ++code) nodes.push_back(node.Child(code));
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (const NodeId& node : collapses) {
    if (node.IsRoot()) throw std::invalid_argument("cannot collapse the root");
    auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
    if (it != nodes.end() && *it == node) nodes.erase(it);
  }
  PrefixTree tree(max_depth_);
  tree.nodes_ = std::move(nodes);
  tree.RebuildLayout();
  return tree;
}

void PrefixTree::RebuildLayout() {
  layout_.clear();
  deepest_depth_ = 0;
  for (const NodeId& node : nodes_) {
    deepest_depth_ = std::max(deepest_depth_, node.depth());
    if (node.depth() == max_depth_) {
      layout_.push_back(node);
      continue;
    }
    int present = 0;
    for (int code = 0; code < 4; ++code) {
      present += Contains(node.Child(code)) ? 1 : 0;
    }
    if (present < 4) layout_.push_back(node);
  }
}

void PrefixTree::Write(std::ostream& out) const {
  for (const NodeId& node : nodes_) {
    if (node.IsRoot()) continue;
    out << node.ToString() << '\n';
  }
}

PrefixTree PrefixTree::Read(std::istream& in, int max_depth) {
  std::vector<NodeId> nodes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nodes.push_back(NodeId::FromString(line));
  }
  return FromNodes(std::move(nodes), max_depth);
}

namespace {

// Walks the cells of `quad`'s region that are not covered by any present node
// in quad's subtree, calling fn(x0, y0, extent) for each maximal uncovered
// square. Present nodes claim their whole region for deeper slots.
template <typename Fn>
void VisitUncovered(const PrefixTree& tree, const NodeId& quad, int side,
                    Fn&& fn) {
  if (tree.Contains(quad)) return;
  if (tree.SubtreeNonEmpty(quad)) {
    for (int code = 0; code < 4; ++code) {
      VisitUncovered(tree, quad.Child(code), side, fn);
    }
    return;
  }
  const Region region = NodeRegion(quad, side);
  fn(region.x0, region.y0, region.extent);
}

int64_t CountOwned(const PrefixTree& tree, const NodeId& node, int side) {
  const Region region = NodeRegion(node, side);
  if (region.extent == 1) return 1;
  int64_t owned = 0;
  for (int code = 0; code < 4; ++code) {
    VisitUncovered(tree, node.Child(code), side,
                   [&owned](int, int, int extent) {
                     owned += static_cast<int64_t>(extent) * extent;
                   });
  }
  return owned;
}

}  // namespace

std::vector<int32_t> PrefixTree::BuildSlotMap(int side) const {
  if (!IsPowerOfTwo(side)) {
    throw std::invalid_argument("side must be a power of two");
  }
  if ((side >> deepest_depth_) == 0) {
    throw std::invalid_argument("grid side coarser than the deepest node");
  }
  std::vector<int32_t> slots(static_cast<size_t>(side) * side, -1);
  const int num_slots = NumSlots();
#pragma omp parallel for schedule(dynamic, 16)
  for (int slot = 0; slot < num_slots; ++slot) {
    const NodeId& node = layout_[slot];
    auto fill = [&](int x0, int y0, int extent) {
      for (int y = y0; y < y0 + extent; ++y) {
        int32_t* row = slots.data() + static_cast<size_t>(y) * side;
        std::fill(row + x0, row + x0 + extent, slot);
      }
    };
    const Region region = NodeRegion(node, side);
    if (region.extent == 1) {
      fill(region.x0, region.y0, 1);
      continue;
    }
    for (int code = 0; code < 4; ++code) {
      VisitUncovered(*this, node.Child(code), side, fill);
    }
  }
  return slots;
}

DensityGrid ProjectToMap(const PrefixTree& tree, std::span<const double> counts,
                         int side) {
  if (static_cast<int>(counts.size()) != tree.NumSlots()) {
    throw std::invalid_argument("counts length must equal layout size");
  }
  if (!IsPowerOfTwo(side)) {
    throw std::invalid_argument("side must be a power of two");
  }
  if ((side >> tree.DeepestDepth()) == 0) {
    throw std::invalid_argument("grid side coarser than the deepest node");
  }
  DensityGrid grid(side);
  const int num_slots = tree.NumSlots();
#pragma omp parallel for schedule(dynamic, 16)
  for (int slot = 0; slot < num_slots; ++slot) {
    const NodeId& node = tree.SlotNode(slot);
    const int64_t owned = CountOwned(tree, node, side);
    if (owned == 0) continue;  // fully covered by orphans; nothing to spread
    const double value = counts[slot] / static_cast<double>(owned);
    auto fill = [&](int x0, int y0, int extent) {
      for (int y = y0; y < y0 + extent; ++y) {
        double* row = grid.values.data() + static_cast<size_t>(y) * side;
        std::fill(row + x0, row + x0 + extent, value);
      }
    };
    const Region region = NodeRegion(node, side);
    if (region.extent == 1) {
      fill(region.x0, region.y0, 1);
      continue;
    }
    for (int code = 0; code < 4; ++code) {
      VisitUncovered(tree, node.Child(code), side, fill);
    }
  }
  return grid;
}

}  // namespace qtree
}  // namespace geohist
