#include <doctest.h>

#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "pcgc/error.hpp"
#include "pcgc/pointcloud_io.hpp"

using namespace pcgc;

namespace {

std::string ply(const std::string& body, std::size_t n, const std::string& extra_props = "") {
  return "ply\nformat ascii 1.0\nelement vertex " + std::to_string(n) +
         "\nproperty float x\nproperty float y\nproperty float z\n" + extra_props + "end_header\n" + body;
}

}  // namespace

TEST_CASE("parse_ply reads vertices") {
  auto c = parse_ply(ply("1.0 2.0 3.0\n", 1));
  REQUIRE(c.count() == 1);
  CHECK(c.points[0] == Vec3{1.0, 2.0, 3.0});

  CHECK(parse_ply(ply("", 0)).count() == 0);

  auto dup = parse_ply(ply("1 1 1\n1 1 1\n", 2));
  CHECK(dup.count() == 2);
}

TEST_CASE("parse_ply skips unknown properties and elements") {
  const std::string text =
      "ply\nformat ascii 1.0\ncomment hello\nelement vertex 2\nproperty double x\nproperty uchar red\n"
      "property double y\nproperty double z\nelement face 1\nproperty list uchar int vertex_indices\n"
      "end_header\n0.5 255 1.5 2.5\n-1 0 -2 -3\n3 0 1 1\n";
  auto c = parse_ply(text);
  REQUIRE(c.count() == 2);
  CHECK(c.points[0] == Vec3{0.5, 1.5, 2.5});
  CHECK(c.points[1] == Vec3{-1, -2, -3});
}

TEST_CASE("parse_ply reports the offending line") {
  try {
    parse_ply(ply("1 2 3\n1 2\n", 2));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 9);
  }
  try {
    parse_ply(ply("1 2 3\n1 x 3\n", 2));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 9);
  }
  CHECK_THROWS_AS(parse_ply("plx\n"), ParseError);
  CHECK_THROWS_AS(parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n"), ParseError);
  CHECK_THROWS_AS(parse_ply(ply("1 2 3\n", 2)), ParseError);
  CHECK_THROWS_AS(parse_ply(ply("1 2 3\n4 5 6\n", 1)), ParseError);
  CHECK_THROWS_AS(parse_ply("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"), ParseError);
  CHECK_THROWS_AS(parse_ply(ply("nan 0 0\n", 1)), ParseError);
}

TEST_CASE("format_ply round trip") {
  Rng rng(3);
  RawCloud c;
  for (int i = 0; i < 50; ++i) c.points.push_back({rng.normal(), rng.normal() * 1e6, rng.uniform()});
  CHECK(parse_ply(format_ply(c)).points == c.points);
}

TEST_CASE("quantize examples") {
  auto q = quantize(RawCloud{{{0, 0, 0}, {1, 1, 1}}}, 1);
  CHECK(q.points == std::vector<Voxel>{{0, 0, 0}, {1, 1, 1}});
  CHECK(q.origin == Vec3{0, 0, 0});
  CHECK(q.scale == 1.0);

  auto single = quantize(RawCloud{{{0, 0, 0}, {0, 0, 0}}}, 4);
  CHECK(single.points == std::vector<Voxel>{{0, 0, 0}});

  CHECK_THROWS_AS(quantize(RawCloud{}, 4), DataError);
  CHECK_THROWS_AS(quantize(RawCloud{{{0, 0, 0}}}, 0), DataError);
  CHECK_THROWS_AS(quantize(RawCloud{{{0, 0, 0}}}, 17), DataError);
}

TEST_CASE("quantize output is in range, unique and sorted") {
  Rng rng(11);
  RawCloud c;
  for (int i = 0; i < 1000; ++i) c.points.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  auto q = quantize(c, 6);
  for (const auto& p : q.points) {
    for (auto v : p) CHECK(v <= 63u);
  }
  for (std::size_t i = 1; i < q.points.size(); ++i) CHECK(q.points[i - 1] < q.points[i]);
}

TEST_CASE("dequantize") {
  QuantizedCloud q;
  q.depth = 3;
  q.points = {{0, 0, 0}};
  q.origin = {1, 1, 1};
  q.scale = 2;
  CHECK(dequantize(q).points == std::vector<Vec3>{{1, 1, 1}});

  // grid-aligned input is a fixed point
  RawCloud grid{{{0, 0, 0}, {0.25, 0.5, 1.75}, {1.75, 1.75, 1.75}, {1.0, 0.0, 0.25}}};
  auto gq = quantize(grid, 3);
  CHECK(gq.scale == 0.25);
  auto back = dequantize(gq).points;
  std::set<Vec3> expected(grid.points.begin(), grid.points.end());
  CHECK(std::set<Vec3>(back.begin(), back.end()) == expected);
}

TEST_CASE("round-trip error is at most one scale step per axis") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    RawCloud c;
    const double spread = rng.uniform(0.1, 100.0);
    for (int i = 0; i < 200; ++i) {
      c.points.push_back({rng.normal() * spread, rng.uniform(-spread, spread), rng.uniform() * 3.0});
    }
    const int depth = 1 + static_cast<int>(rng.below(10));
    auto q = quantize(c, depth);
    auto back = dequantize(q).points;
    std::set<Vec3> recovered(back.begin(), back.end());
    for (const auto& p : c.points) {
      // the voxel that p fell into, recomputed here by hand
      Vec3 best{};
      double best_err = 1e300;
      for (const auto& r : recovered) {
        double err = 0.0;
        for (int a = 0; a < 3; ++a) err = std::max(err, std::abs(r[a] - p[a]));
        if (err < best_err) {
          best_err = err;
          best = r;
        }
      }
      CHECK(best_err <= q.scale * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("quantize of dequantize is the identity") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto q = oracle::random_cloud(rng, 1 + static_cast<int>(rng.below(12)), 300);
    // quantize re-derives origin and scale from the extent, so compare only
    // when the cloud spans the full grid along some axis
    q.points.push_back({0, 0, 0});
    const std::uint32_t top = (1u << q.depth) - 1;
    q.points.push_back({top, top, top});
    canonicalize(q.points);
    auto again = quantize(dequantize(q), q.depth);
    CHECK(again.points == q.points);
  }
}

TEST_CASE("quantized text format round trip") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto q = oracle::random_cloud(rng, 1 + static_cast<int>(rng.below(16)), 100);
    CHECK(parse_quantized(format_quantized(q)) == q);
  }
  // a quantized file is still a plain PLY
  QuantizedCloud q;
  q.depth = 2;
  q.points = {{1, 2, 3}};
  CHECK(parse_ply(format_quantized(q)).points == std::vector<Vec3>{{1, 2, 3}});
}

TEST_CASE("parse_quantized rejects inconsistent files") {
  QuantizedCloud q;
  q.depth = 2;
  q.points = {{1, 2, 3}};
  std::string text = format_quantized(q);
  auto bad_coord = text;
  bad_coord.replace(bad_coord.rfind("1 2 3"), 5, "1 2 4");
  CHECK_THROWS_AS(parse_quantized(bad_coord), DataError);
  auto no_depth = text;
  no_depth.erase(no_depth.find("comment pcgc depth"), std::string("comment pcgc depth 2\n").size());
  CHECK_THROWS_AS(parse_quantized(no_depth), DataError);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "pcgc_io_test";
  std::filesystem::create_directories(dir);
  QuantizedCloud q;
  q.depth = 5;
  q.points = {{1, 2, 3}, {4, 5, 6}};
  write_quantized(dir / "q.ply", q);
  CHECK(read_quantized(dir / "q.ply") == q);
  CHECK_THROWS_AS(read_file(dir / "missing.ply"), DataError);
  std::filesystem::remove_all(dir);
}
