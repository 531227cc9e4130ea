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

#ifndef GEOHIST_TREE_H_
#define GEOHIST_TREE_H_

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace geohist {
namespace qtree {

// Identifier of one quaternary tree node: a sequence of 2-bit quadrant codes,
// one per level. A code packs the level's x bit (high) and y bit (low); the
// empty sequence is the root. Codes are stored left-aligned in a 64-bit word,
// so unsigned comparison of (path, depth) is exactly lexicographic order over
// code sequences, with prefixes sorting first.
class NodeId {
 public:
  static constexpr int kMaxDepth = 16;

  constexpr NodeId() = default;  // root

  constexpr int depth() const { return depth_; }
  constexpr bool IsRoot() const { return depth_ == 0; }

  // Quadrant code at level (0-based), in 0..3.
  constexpr int Code(int level) const {
    return static_cast<int>((path_ >> (62 - 2 * level)) & 3u);
  }

  constexpr NodeId Child(int code) const {
    NodeId child = *this;
    child.path_ |= static_cast<uint64_t>(code & 3) << (62 - 2 * depth_);
    child.depth_ = depth_ + 1;
    return child;
  }

  constexpr NodeId Parent() const {
    NodeId parent = *this;
    parent.depth_ = depth_ - 1;
    parent.path_ &= ~(3ULL << (62 - 2 * parent.depth_));
    return parent;
  }

  constexpr NodeId Prefix(int depth) const {
    NodeId prefix;
    prefix.depth_ = depth;
    prefix.path_ = depth == 0 ? 0 : path_ & ~0ULL << (64 - 2 * depth);
    return prefix;
  }

  constexpr bool IsPrefixOf(const NodeId& other) const {
    return depth_ <= other.depth_ && other.Prefix(depth_).path_ == path_;
  }

  friend constexpr auto operator<=>(const NodeId& a, const NodeId& b) {
    if (auto c = a.path_ <=> b.path_; c != 0) return c;
    return a.depth_ <=> b.depth_;
  }
  friend constexpr bool operator==(const NodeId&, const NodeId&) = default;

  // Bitstring form, codes separated by spaces: "10 11 00". Root is "".
  std::string ToString() const;
  static NodeId FromString(const std::string& text);

 private:
  uint64_t path_ = 0;
  int depth_ = 0;
};

// Encodes a finest-resolution coordinate as the depth-`depth` node containing
// it, by interleaving the most significant bits of x and y (x bit first).
NodeId EncodeLocation(int x, int y, int depth, int side);

// Decodes a node to the origin (in finest-resolution cells at grid `side`)
// and side length of its region.
struct Region {
  int x0 = 0;
  int y0 = 0;
  int extent = 0;  // region side length in cells
};
Region NodeRegion(const NodeId& node, int side);

// Fixed-resolution real-valued map. Used for ground truth, projections of
// tree estimates, metrics and rendering.
struct DensityGrid {
  int side = 0;
  std::vector<double> values;  // row-major, values[y * side + x]

  DensityGrid() = default;
  DensityGrid(int side_in, double fill = 0.0)
      : side(side_in),
        values(static_cast<size_t>(side_in) * side_in, fill) {}

  double& At(int x, int y) { return values[static_cast<size_t>(y) * side + x]; }
  double At(int x, int y) const {
    return values[static_cast<size_t>(y) * side + x];
  }
  double Total() const;
};

// Variable-resolution quaternary partition of a square map.
//
// Membership is by NodeId alone and orphans are allowed: a node's parent need
// not be present. Every node with fewer than four present children
// "accumulates" client reports and owns one slot of the aggregation vector;
// slots are assigned in lexicographic NodeId order. Trees are immutable
// values: Split and Collapse return new trees.
class PrefixTree {
 public:
  // Tree containing only the root.
  explicit PrefixTree(int max_depth);

  // Complete uniform tree: all nodes of depth <= depth are present, so the
  // layout is exactly the 4^depth nodes at that depth.
  static PrefixTree Uniform(int depth, int max_depth);

  static PrefixTree FromNodes(std::vector<NodeId> nodes, int max_depth);

  int max_depth() const { return max_depth_; }
  int DeepestDepth() const { return deepest_depth_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }

  // Number of accumulating nodes T == length of the aggregation vector.
  int NumSlots() const { return static_cast<int>(layout_.size()); }
  const std::vector<NodeId>& layout() const { return layout_; }
  const NodeId& SlotNode(int slot) const { return layout_[slot]; }

  bool Contains(const NodeId& node) const;
  bool Accumulates(const NodeId& node) const;

  // Slot of a present accumulating node; -1 otherwise.
  int SlotOf(const NodeId& node) const;

  // Slot of the deepest accumulating node whose id prefixes `leaf`
  // (leaf at max_depth). The root guarantees a match.
  int LongestPrefixSlot(const NodeId& leaf) const;

  // Adds all four children of `node` (no-op when node is absent or already at
  // max_depth).
  PrefixTree Split(const NodeId& node) const;

  // Removes `node` only; descendants stay behind as orphans. No-op when the
  // node is absent. Collapsing the root is invalid.
  PrefixTree Collapse(const NodeId& node) const;

  // Applies a batch of split/collapse decisions evaluated against this tree:
  // children of all `splits` are added, then all `collapses` are removed.
  PrefixTree Apply(std::span<const NodeId> splits,
                   std::span<const NodeId> collapses) const;

  // True if any present node has `node` as a (non-strict) prefix.
  bool SubtreeNonEmpty(const NodeId& node) const;

  // Per-coordinate slot index at resolution `side` (row-major). The regions
  // of accumulating nodes partition the map, so every cell gets a slot.
  std::vector<int32_t> BuildSlotMap(int side) const;

  // One non-root node per line as a bitstring; the root is implicit.
  void Write(std::ostream& out) const;
  static PrefixTree Read(std::istream& in, int max_depth);

  friend bool operator==(const PrefixTree& a, const PrefixTree& b) {
    return a.max_depth_ == b.max_depth_ && a.nodes_ == b.nodes_;
  }

 private:
  void RebuildLayout();

  int max_depth_;
  int deepest_depth_ = 0;
  std::vector<NodeId> nodes_;   // sorted, always contains root
  std::vector<NodeId> layout_;  // sorted accumulating nodes
};

// Spreads each slot's value uniformly over the coordinates of its node's
// region not covered by any present descendant. Mass is conserved for every
// slot whose region is not fully covered. OpenMP-parallel over slots.
DensityGrid ProjectToMap(const PrefixTree& tree, std::span<const double> counts,
                         int side);

}  // namespace qtree
}  // namespace geohist

#endif  // GEOHIST_TREE_H_
