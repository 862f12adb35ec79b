#include "pcgc/octree.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "pcgc/error.hpp"

namespace pcgc {

namespace {

// Interleaves bits so that each 3-bit digit is (x, y, z) = 4*bx + 2*by + bz,
// most significant level first.
std::uint64_t morton_code(const Voxel& v, int depth) {
  std::uint64_t code = 0;
  for (int b = depth - 1; b >= 0; --b) {
    code = (code << 3) | (((v[0] >> b) & 1u) << 2) | (((v[1] >> b) & 1u) << 1) | ((v[2] >> b) & 1u);
  }
  return code;
}

Voxel morton_origin(std::uint64_t prefix, int prefix_digits, int depth) {
  Voxel v{0, 0, 0};
  for (int d = 0; d < prefix_digits; ++d) {
    const auto digit = static_cast<std::uint32_t>((prefix >> (3 * (prefix_digits - 1 - d))) & 7u);
    const int bit = depth - 1 - d;
    v[0] |= ((digit >> 2) & 1u) << bit;
    v[1] |= ((digit >> 1) & 1u) << bit;
    v[2] |= (digit & 1u) << bit;
  }
  return v;
}

}  // namespace

std::size_t Octree::node_count() const {
  std::size_t n = 0;
  for (const auto& level : levels) n += level.size();
  return n;
}

OccupancySymbol occupancy_byte(const std::array<bool, 8>& flags) {
  unsigned value = 0;
  for (int k = 0; k < 8; ++k) {
    if (flags[k]) value |= octant_bit(k);
  }
  if (value == 0) throw DataError("occupancy_byte: all-empty configuration is not a symbol");
  return static_cast<OccupancySymbol>(value);
}

std::array<bool, 8> occupancy_flags(OccupancySymbol symbol) {
  std::array<bool, 8> flags{};
  for (int k = 0; k < 8; ++k) flags[k] = (symbol & octant_bit(k)) != 0;
  return flags;
}

int child_count(OccupancySymbol symbol) { return std::popcount(static_cast<unsigned>(symbol)); }

std::uint32_t cell_size(int depth, std::uint32_t level) {
  return std::uint32_t{1} << (depth - static_cast<int>(level));
}

int octant_of(const Voxel& child, const Voxel& parent, std::uint32_t child_size) {
  int octant = 0;
  for (int a = 0; a < 3; ++a) {
    if (child[a] < parent[a]) throw DataError("octant_of: child lies outside its parent");
    const std::uint64_t offset = child[a] - parent[a];
    if (offset >= 2ull * child_size) throw DataError("octant_of: child lies outside its parent");
    octant = octant * 2 + (offset >= child_size ? 1 : 0);
  }
  return octant;
}

Voxel child_origin(const Voxel& parent, int octant, std::uint32_t child_size) {
  return {parent[0] + ((octant >> 2) & 1) * child_size, parent[1] + ((octant >> 1) & 1) * child_size,
          parent[2] + (octant & 1) * child_size};
}

Octree build_octree(const QuantizedCloud& cloud) {
  if (cloud.points.empty()) throw DataError("build_octree: empty cloud");
  const int depth = cloud.depth;
  if (depth < kMinDepth || depth > kMaxDepth) throw DataError("build_octree: depth out of range");
  const std::uint32_t limit = std::uint32_t{1} << depth;

  for (std::size_t i = 1; i < cloud.points.size(); ++i) {
    if (!(cloud.points[i - 1] < cloud.points[i])) throw DataError("build_octree: points must be unique and sorted");
  }
  std::vector<std::uint64_t> codes;
  codes.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    if (p[0] >= limit || p[1] >= limit || p[2] >= limit) {
      throw DataError("build_octree: voxel outside the 2^depth grid");
    }
    codes.push_back(morton_code(p, depth));
  }
  std::sort(codes.begin(), codes.end());

  Octree tree;
  tree.depth = depth;
  tree.levels.resize(depth);
  for (int l = 0; l < depth; ++l) {
    auto& level = tree.levels[l];
    const int node_shift = 3 * (depth - l);
    const int child_shift = node_shift - 3;
    std::int32_t parent_index = -1;
    std::uint64_t parent_key = ~0ull;
    std::uint64_t key = ~0ull;
    for (std::uint64_t code : codes) {
      const std::uint64_t k = node_shift >= 64 ? 0 : code >> node_shift;
      if (k != key || level.empty()) {
        key = k;
        OctreeNode node;
        node.level = static_cast<std::uint32_t>(l);
        node.origin = morton_origin(k, l, depth);
        if (l > 0) {
          if ((k >> 3) != parent_key) {
            parent_key = k >> 3;
            ++parent_index;
          }
          node.octant = static_cast<std::uint8_t>(k & 7u);
          node.parent = parent_index;
        }
        level.push_back(node);
      }
      level.back().symbol |= octant_bit(static_cast<int>((code >> child_shift) & 7u));
    }
  }
  return tree;
}

std::vector<OctreeNode> expand_level(const std::vector<OctreeNode>& parent_level, int depth) {
  std::vector<OctreeNode> children;
  for (std::size_t i = 0; i < parent_level.size(); ++i) {
    const auto& p = parent_level[i];
    const std::uint32_t size = cell_size(depth, p.level + 1);
    for (int o = 0; o < 8; ++o) {
      if ((p.symbol & octant_bit(o)) == 0) continue;
      OctreeNode c;
      c.level = p.level + 1;
      c.origin = child_origin(p.origin, o, size);
      c.octant = static_cast<std::uint8_t>(o);
      c.parent = static_cast<std::int32_t>(i);
      children.push_back(c);
    }
  }
  return children;
}

void validate(const Octree& tree) {
  auto fail = [](const std::string& msg) { throw VerificationError("octree: " + msg); };
  if (tree.depth < kMinDepth || tree.depth > kMaxDepth) fail("depth out of range");
  if (static_cast<int>(tree.levels.size()) != tree.depth) fail("level count differs from depth");
  if (tree.levels[0].size() != 1) fail("level 0 must hold exactly the root");
  const auto& root = tree.levels[0][0];
  if (root.parent != -1 || root.octant != 0 || root.origin != Voxel{0, 0, 0}) fail("malformed root");
  for (int l = 0; l < tree.depth; ++l) {
    for (std::size_t i = 0; i < tree.levels[l].size(); ++i) {
      const auto& n = tree.levels[l][i];
      if (n.symbol == 0) fail("empty symbol at level " + std::to_string(l) + " node " + std::to_string(i));
      if (n.level != static_cast<std::uint32_t>(l)) fail("node level tag mismatch");
    }
    if (l + 1 < tree.depth) {
      const auto expected = expand_level(tree.levels[l], tree.depth);
      const auto& actual = tree.levels[l + 1];
      if (expected.size() != actual.size()) {
        fail("level " + std::to_string(l + 1) + " has " + std::to_string(actual.size()) +
             " nodes, parent popcount says " + std::to_string(expected.size()));
      }
      for (std::size_t i = 0; i < actual.size(); ++i) {
        const auto& a = actual[i];
        const auto& e = expected[i];
        if (a.parent != e.parent || a.octant != e.octant || a.origin != e.origin) {
          fail("inconsistent node at level " + std::to_string(l + 1) + " index " + std::to_string(i));
        }
      }
    }
  }
}

QuantizedCloud reconstruct_points(const Octree& tree) {
  validate(tree);
  QuantizedCloud out;
  out.depth = tree.depth;
  for (const auto& leaf : tree.levels.back()) {
    for (int o = 0; o < 8; ++o) {
      if (leaf.symbol & octant_bit(o)) out.points.push_back(child_origin(leaf.origin, o, 1));
    }
  }
  canonicalize(out.points);
  return out;
}

std::vector<StreamEntry> symbol_stream(const Octree& tree) {
  std::vector<StreamEntry> stream;
  stream.reserve(tree.node_count());
  for (std::uint32_t l = 0; l < tree.levels.size(); ++l) {
    for (std::uint32_t i = 0; i < tree.levels[l].size(); ++i) {
      stream.push_back({{l, i}, tree.levels[l][i].symbol});
    }
  }
  return stream;
}

}  // namespace pcgc
