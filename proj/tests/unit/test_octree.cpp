#include <doctest.h>

#include "oracles.hpp"
#include "pcgc/error.hpp"
#include "pcgc/octree.hpp"

using namespace pcgc;

namespace {

QuantizedCloud cloud(int depth, std::vector<Voxel> pts) {
  QuantizedCloud c;
  c.depth = depth;
  c.points = std::move(pts);
  canonicalize(c.points);
  return c;
}

std::vector<std::vector<std::uint8_t>> symbols(const Octree& t) {
  std::vector<std::vector<std::uint8_t>> out;
  for (const auto& level : t.levels) {
    out.emplace_back();
    for (const auto& n : level) out.back().push_back(n.symbol);
  }
  return out;
}

}  // namespace

TEST_CASE("occupancy_byte examples") {
  CHECK(occupancy_byte({false, false, false, false, false, false, true, false}) == 2);
  CHECK(occupancy_byte({true, true, true, true, true, true, true, true}) == 255);
  CHECK(occupancy_byte({true, false, false, false, false, false, false, false}) == 128);
  CHECK_THROWS_AS(occupancy_byte({}), DataError);
}

TEST_CASE("occupancy_byte is a bijection onto 1..255") {
  std::set<int> seen;
  for (unsigned mask = 1; mask < 256; ++mask) {
    std::array<bool, 8> flags{};
    for (int k = 0; k < 8; ++k) flags[k] = (mask >> (7 - k)) & 1u;
    const auto s = occupancy_byte(flags);
    CHECK(s == mask);
    CHECK(occupancy_flags(s) == flags);
    CHECK(child_count(s) == oracle::popcount8(mask));
    seen.insert(s);
  }
  CHECK(seen.size() == 255);
}

TEST_CASE("octant_of examples") {
  const Voxel parent{8, 8, 8};
  const std::uint32_t s = 4;
  CHECK(octant_of({8, 8, 8}, parent, s) == 0);
  CHECK(octant_of({12, 8, 8}, parent, s) == 4);
  CHECK(octant_of({8, 12, 8}, parent, s) == 2);
  CHECK(octant_of({8, 8, 12}, parent, s) == 1);
  CHECK(octant_of({12, 12, 12}, parent, s) == 7);
  CHECK_THROWS(octant_of({16, 8, 8}, parent, s));
  CHECK_THROWS(octant_of({4, 8, 8}, parent, s));
  for (int k = 0; k < 8; ++k) CHECK(octant_of(child_origin(parent, k, s), parent, s) == k);
}

TEST_CASE("build_octree examples") {
  CHECK(symbols(build_octree(cloud(2, {{0, 0, 0}}))) == std::vector<std::vector<std::uint8_t>>{{128}, {128}});

  std::vector<Voxel> corners;
  for (std::uint32_t x = 0; x < 2; ++x)
    for (std::uint32_t y = 0; y < 2; ++y)
      for (std::uint32_t z = 0; z < 2; ++z) corners.push_back({x, y, z});
  CHECK(symbols(build_octree(cloud(1, corners))) == std::vector<std::vector<std::uint8_t>>{{255}});

  CHECK(symbols(build_octree(cloud(1, {{0, 0, 0}, {1, 1, 1}}))) == std::vector<std::vector<std::uint8_t>>{{129}});
}

TEST_CASE("build_octree rejects bad input") {
  CHECK_THROWS_AS(build_octree(cloud(2, {})), DataError);
  CHECK_THROWS_AS(build_octree(cloud(2, {{4, 0, 0}})), DataError);
  auto unsorted = cloud(3, {{1, 0, 0}, {0, 0, 0}});
  std::swap(unsorted.points[0], unsorted.points[1]);
  CHECK_THROWS_AS(build_octree(unsorted), DataError);
}

TEST_CASE("build_octree agrees with brute-force subdivision") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int depth = 1 + static_cast<int>(rng.below(7));
    auto c = cloud(depth, oracle::random_voxels(rng, depth, 1 + rng.below(300)));
    const Octree t = build_octree(c);
    CHECK(symbols(t) == oracle::octree_levels(c.points, depth));
    CHECK_NOTHROW(validate(t));
  }
}

TEST_CASE("reconstruct_points inverts build_octree") {
  for (const auto& c : {cloud(2, {{0, 0, 0}}), cloud(1, {{0, 0, 0}, {1, 1, 1}})}) {
    CHECK(reconstruct_points(build_octree(c)) == c);
  }
  Octree full;
  full.depth = 1;
  full.levels = {{OctreeNode{}}};
  full.levels[0][0].symbol = 255;
  CHECK(reconstruct_points(full).points.size() == 8);

  Rng rng(43);
  for (int trial = 0; trial < 500; ++trial) {
    const int depth = 1 + static_cast<int>(rng.below(6));
    auto c = cloud(depth, oracle::random_voxels(rng, depth, 1 + rng.below(500)));
    CHECK(reconstruct_points(build_octree(c)) == c);
  }
}

TEST_CASE("symbol_stream") {
  auto s = symbol_stream(build_octree(cloud(2, {{0, 0, 0}})));
  REQUIRE(s.size() == 2);
  CHECK(s[0].symbol == 128);
  CHECK(s[1].symbol == 128);
  CHECK(s[1].ref == NodeRef{1, 0});

  Rng rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const int depth = 1 + static_cast<int>(rng.below(6));
    const Octree t = build_octree(cloud(depth, oracle::random_voxels(rng, depth, 1 + rng.below(300))));
    const auto stream = symbol_stream(t);
    CHECK(stream.size() == t.node_count());

    // replay the stream level by level through expand_level
    Octree replay;
    replay.depth = depth;
    replay.levels = {{OctreeNode{}}};
    std::size_t pos = 0;
    for (int l = 0; l < depth; ++l) {
      for (auto& n : replay.levels[l]) n.symbol = stream.at(pos++).symbol;
      if (l + 1 < depth) replay.levels.push_back(expand_level(replay.levels[l], depth));
    }
    CHECK(pos == stream.size());
    REQUIRE(replay.levels.size() == t.levels.size());
    for (std::size_t l = 0; l < t.levels.size(); ++l) CHECK(replay.levels[l].size() == t.levels[l].size());
    CHECK(reconstruct_points(replay).points == reconstruct_points(t).points);
  }
}

TEST_CASE("validate catches broken trees") {
  Rng rng(53);
  auto c = cloud(4, oracle::random_voxels(rng, 4, 40));
  Octree t = build_octree(c);
  CHECK_NOTHROW(validate(t));

  auto zero = t;
  zero.levels[1][0].symbol = 0;
  CHECK_THROWS_AS(validate(zero), VerificationError);

  auto missing_child = t;
  missing_child.levels[2].pop_back();
  CHECK_THROWS_AS(validate(missing_child), VerificationError);

  auto bad_parent = t;
  bad_parent.levels[1][0].parent = 5;
  CHECK_THROWS_AS(validate(bad_parent), VerificationError);
}

TEST_CASE("cell_size") {
  CHECK(cell_size(3, 0) == 8);
  CHECK(cell_size(3, 2) == 2);
}
