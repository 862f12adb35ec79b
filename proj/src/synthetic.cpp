#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "pcgc/bytes.hpp"
#include "pcgc/error.hpp"
#include "pcgc/octree.hpp"
#include "pcgc/random.hpp"
#include "pcgc/trainer.hpp"

namespace pcgc {

namespace {

Vec3 random_unit(Rng& rng) {
  while (true) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n > 1e-9) return {v[0] / n, v[1] / n, v[2] / n};
  }
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

bool inside_unit_cube(const Vec3& p) {
  return p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0 && p[2] >= 0.0 && p[2] <= 1.0;
}

RawCloud plane(std::size_t budget, Rng& rng) {
  const Vec3 normal = random_unit(rng);
  const Vec3 helper = std::abs(normal[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 u = normalized(cross(normal, helper));
  const Vec3 w = cross(normal, u);
  const Vec3 c{rng.uniform(0.4, 0.6), rng.uniform(0.4, 0.6), rng.uniform(0.4, 0.6)};
  RawCloud cloud;
  while (cloud.points.size() < budget) {
    const double a = rng.uniform(-0.9, 0.9);
    const double b = rng.uniform(-0.9, 0.9);
    const Vec3 p{c[0] + a * u[0] + b * w[0], c[1] + a * u[1] + b * w[1], c[2] + a * u[2] + b * w[2]};
    if (inside_unit_cube(p)) cloud.points.push_back(p);
  }
  return cloud;
}

RawCloud sphere(std::size_t budget, Rng& rng) {
  const Vec3 c{rng.uniform(0.45, 0.55), rng.uniform(0.45, 0.55), rng.uniform(0.45, 0.55)};
  const double r = rng.uniform(0.3, 0.45);
  RawCloud cloud;
  cloud.points.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    const Vec3 d = random_unit(rng);
    cloud.points.push_back({c[0] + r * d[0], c[1] + r * d[1], c[2] + r * d[2]});
  }
  return cloud;
}

RawCloud gaussian_clusters(std::size_t budget, Rng& rng) {
  const std::size_t n_clusters = 3 + rng.below(6);
  std::vector<Vec3> centers;
  std::vector<double> sigmas;
  for (std::size_t k = 0; k < n_clusters; ++k) {
    centers.push_back({rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)});
    sigmas.push_back(rng.uniform(0.05, 0.15));
  }
  RawCloud cloud;
  cloud.points.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    const std::size_t k = rng.below(n_clusters);
    cloud.points.push_back({centers[k][0] + sigmas[k] * rng.normal(), centers[k][1] + sigmas[k] * rng.normal(),
                            centers[k][2] + sigmas[k] * rng.normal()});
  }
  return cloud;
}

// Height field z = 0.5 + a * (walk_x(x) + walk_y(y)) where each walk is a
// piecewise-linear Gaussian random walk over 32 knots.
RawCloud random_walk_surface(std::size_t budget, Rng& rng) {
  constexpr int kKnots = 32;
  auto make_walk = [&] {
    std::vector<double> walk(kKnots + 1, 0.0);
    for (int i = 1; i <= kKnots; ++i) walk[i] = walk[i - 1] + rng.normal();
    const auto [lo, hi] = std::minmax_element(walk.begin(), walk.end());
    const double span = std::max(*hi - *lo, 1e-9);
    const double mid = 0.5 * (*hi + *lo);
    for (auto& v : walk) v = (v - mid) / span;
    return walk;
  };
  const auto wx = make_walk();
  const auto wy = make_walk();
  auto eval = [&](const std::vector<double>& walk, double t) {
    const double s = t * kKnots;
    const int i = std::min(static_cast<int>(s), kKnots - 1);
    const double f = s - i;
    return walk[i] * (1.0 - f) + walk[i + 1] * f;
  };
  const double amplitude = rng.uniform(0.15, 0.3);
  RawCloud cloud;
  cloud.points.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    const double x = rng.uniform();
    const double y = rng.uniform();
    cloud.points.push_back({x, y, 0.5 + amplitude * (eval(wx, x) + eval(wy, y))});
  }
  return cloud;
}

}  // namespace

const char* to_string(CloudKind kind) {
  switch (kind) {
    case CloudKind::Plane:
      return "plane";
    case CloudKind::Sphere:
      return "sphere";
    case CloudKind::GaussianClusters:
      return "gaussian-clusters";
    case CloudKind::RandomWalkSurface:
      return "random-walk-surface";
  }
  return "unknown";
}

CloudKind parse_cloud_kind(const std::string& name) {
  for (auto k : {CloudKind::Plane, CloudKind::Sphere, CloudKind::GaussianClusters, CloudKind::RandomWalkSurface}) {
    if (name == to_string(k)) return k;
  }
  throw DataError("unknown cloud kind '" + name + "'");
}

QuantizedCloud generate_cloud(const SyntheticSpec& spec) {
  if (spec.points == 0) throw DataError("generate_cloud: zero point budget");
  Rng rng(spec.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(spec.kind));
  RawCloud raw;
  switch (spec.kind) {
    case CloudKind::Plane:
      raw = plane(spec.points, rng);
      break;
    case CloudKind::Sphere:
      raw = sphere(spec.points, rng);
      break;
    case CloudKind::GaussianClusters:
      raw = gaussian_clusters(spec.points, rng);
      break;
    case CloudKind::RandomWalkSurface:
      raw = random_walk_surface(spec.points, rng);
      break;
  }
  return quantize(raw, spec.depth);
}

std::vector<NamedCloud> generate_corpus(const std::vector<CloudKind>& kinds, std::size_t count, std::size_t points,
                                        int depth, std::uint64_t seed) {
  if (kinds.empty()) throw DataError("generate_corpus: no cloud kinds");
  std::vector<NamedCloud> out;
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSpec spec{kinds[i % kinds.size()], points, depth, seed * 1000003ull + i};
    out.push_back({std::string(to_string(spec.kind)) + "-" + std::to_string(spec.seed), generate_cloud(spec)});
  }
  return out;
}

DatasetSplit split_by_digest(std::vector<NamedCloud> clouds, double held_out_fraction) {
  if (held_out_fraction <= 0.0 || held_out_fraction >= 1.0) {
    throw DataError("split_by_digest: fraction must lie in (0, 1)");
  }
  std::vector<std::pair<Digest, std::size_t>> keyed;
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    keyed.emplace_back(sha256(as_bytes(format_quantized(clouds[i].cloud))), i);
  }
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t i = 1; i < keyed.size(); ++i) {
    if (keyed[i].first == keyed[i - 1].first) {
      throw DataError("split_by_digest: duplicate cloud " + clouds[keyed[i].second].name);
    }
  }
  const auto n_held = static_cast<std::size_t>(std::ceil(held_out_fraction * static_cast<double>(clouds.size())));
  DatasetSplit split;
  std::set<Digest> held_digests;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    auto& target = i < n_held ? split.held_out : split.train;
    if (i < n_held) held_digests.insert(keyed[i].first);
    target.push_back(std::move(clouds[keyed[i].second]));
  }
  for (std::size_t i = n_held; i < keyed.size(); ++i) {
    if (held_digests.count(keyed[i].first) != 0) throw DataError("split_by_digest: splits overlap");
  }
  return split;
}

double empirical_stream_bits_per_point(const QuantizedCloud& cloud) {
  const Octree tree = build_octree(cloud);
  std::map<OccupancySymbol, std::size_t> hist;
  for (const auto& e : symbol_stream(tree)) ++hist[e.symbol];
  const double m = static_cast<double>(tree.node_count());
  double bits = 0.0;
  for (const auto& [s, c] : hist) bits += -static_cast<double>(c) * std::log2(static_cast<double>(c) / m);
  return bits / static_cast<double>(cloud.points.size());
}

}  // namespace pcgc
