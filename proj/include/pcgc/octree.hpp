#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pcgc/pointcloud_io.hpp"

namespace pcgc {

// Occupancy of the eight children of a node, in [1, 255]. Child slot k
// (1-based, octant k-1) carries bit weight 2^(8-k), so octant 0 is the MSB.
using OccupancySymbol = std::uint8_t;

constexpr int kNumSymbols = 255;

struct OctreeNode {
  std::uint32_t level = 0;
  Voxel origin{0, 0, 0};     // in full-grid voxel units
  std::uint8_t octant = 0;   // position within the parent; 0 for the root
  std::int32_t parent = -1;  // index into the previous level; -1 for the root
  OccupancySymbol symbol = 0;  // 0 only while a decoder has not filled it in
};

struct NodeRef {
  std::uint32_t level = 0;
  std::uint32_t index = 0;

  bool operator==(const NodeRef&) const = default;
};

// Breadth-first levels; each level is ordered by (parent index, octant).
struct Octree {
  int depth = 0;
  std::vector<std::vector<OctreeNode>> levels;

  std::size_t node_count() const;
  const OctreeNode& node(NodeRef ref) const { return levels.at(ref.level).at(ref.index); }
};

struct StreamEntry {
  NodeRef ref;
  OccupancySymbol symbol = 0;
};

OccupancySymbol occupancy_byte(const std::array<bool, 8>& flags);
std::array<bool, 8> occupancy_flags(OccupancySymbol symbol);
constexpr std::uint8_t octant_bit(int octant) { return static_cast<std::uint8_t>(0x80u >> octant); }
int child_count(OccupancySymbol symbol);

std::uint32_t cell_size(int depth, std::uint32_t level);

// 4*bx + 2*by + bz, bx set when the child sits in the upper half along x.
int octant_of(const Voxel& child_origin, const Voxel& parent_origin, std::uint32_t child_cell_size);
Voxel child_origin(const Voxel& parent_origin, int octant, std::uint32_t child_cell_size);

Octree build_octree(const QuantizedCloud& cloud);

// Children of every node of `parent_level` in breadth-first order. Symbols of
// the returned nodes are left at 0.
std::vector<OctreeNode> expand_level(const std::vector<OctreeNode>& parent_level, int depth);

// Throws VerificationError on any broken structural invariant.
void validate(const Octree& tree);

// Leaf voxels in canonical order. The result carries depth only; origin and
// scale are left at their defaults.
QuantizedCloud reconstruct_points(const Octree& tree);

std::vector<StreamEntry> symbol_stream(const Octree& tree);

}  // namespace pcgc
