#include "pcgc/context.hpp"

#include <algorithm>
#include <string>

#include "pcgc/error.hpp"

namespace pcgc {

namespace {

void check_node(const Octree& prefix, NodeRef node) {
  if (node.level >= prefix.levels.size() || node.index >= prefix.levels[node.level].size()) {
    throw DataError("context: node (" + std::to_string(node.level) + ", " + std::to_string(node.index) +
                    ") is not in the decoded prefix");
  }
}

std::vector<OccupancySymbol> collect_ancestors(const Octree& prefix, NodeRef node, int k) {
  std::vector<OccupancySymbol> out(static_cast<std::size_t>(k), 0);
  std::int32_t parent = prefix.levels[node.level][node.index].parent;
  std::uint32_t level = node.level;
  for (int a = 0; a < k && level > 0; ++a) {
    --level;
    const auto& p = prefix.levels.at(level).at(static_cast<std::size_t>(parent));
    out[a] = p.symbol;
    parent = p.parent;
  }
  return out;
}

Vec3 normalized_position(const Voxel& origin, int depth) {
  const double extent = static_cast<double>(std::uint32_t{1} << depth);
  return {origin[0] / extent, origin[1] / extent, origin[2] / extent};
}

void write_geometry(std::span<double> out, double level_norm, std::uint8_t octant, const Vec3& pos) {
  out[0] = level_norm;
  out[1 + octant] = 1.0;
  out[9] = pos[0];
  out[10] = pos[1];
  out[11] = pos[2];
}

void write_onehot(std::span<double> block, OccupancySymbol s) {
  if (s != 0) block[s - 1] = 1.0;
}

}  // namespace

std::size_t ContextConfig::token_count() const {
  return window == 0 ? static_cast<std::size_t>(ancestors) + 1 : static_cast<std::size_t>(window) + 1;
}

std::size_t ContextConfig::token_width() const {
  if (window == 0) return 255u + static_cast<std::size_t>(ancestors) + 1u + 12u;
  return 255u * (static_cast<std::size_t>(ancestors) + 1u) + 12u;
}

void ContextFeatures::write_dense(std::span<double> out) const {
  const std::size_t k = ancestors.size();
  if (out.size() != 255 * k + 12) throw DataError("context: dense buffer width mismatch");
  for (std::size_t a = 0; a < k; ++a) write_onehot(out.subspan(255 * a, 255), ancestors[a]);
  write_geometry(out.subspan(255 * k), level_norm, octant, position);
}

std::vector<double> ContextFeatures::dense() const {
  std::vector<double> out(255 * ancestors.size() + 12, 0.0);
  write_dense(out);
  return out;
}

void ContextFeatures::write_tokens(const ContextConfig& cfg, std::span<double> rows,
                                   std::span<std::uint8_t> padding) const {
  const std::size_t n = cfg.token_count();
  const std::size_t t = cfg.token_width();
  const std::size_t k = static_cast<std::size_t>(cfg.ancestors);
  if (rows.size() != n * t || padding.size() != n || ancestors.size() != k) {
    throw DataError("context: token buffer does not match the configured layout");
  }
  if (cfg.window == 0) {
    // [symbol one-hot 255 | slot one-hot K+1 | geometry 12]
    for (std::size_t r = 0; r < n; ++r) {
      auto row = rows.subspan(r * t, t);
      row[255 + r] = 1.0;
      write_geometry(row.subspan(255 + k + 1), level_norm, octant, position);
      if (r == 0) {
        padding[r] = 0;
      } else {
        write_onehot(row.first(255), ancestors[r - 1]);
        padding[r] = ancestors[r - 1] == 0 ? 1 : 0;
      }
    }
    return;
  }
  if (window.size() != static_cast<std::size_t>(cfg.window)) {
    throw DataError("context: sibling window length does not match the configured layout");
  }
  // [own symbol 255 | K ancestor blocks | geometry 12]; the self row leaves
  // its own block empty since that symbol is what is being predicted.
  auto self = rows.first(t);
  for (std::size_t a = 0; a < k; ++a) write_onehot(self.subspan(255 * (a + 1), 255), ancestors[a]);
  write_geometry(self.subspan(255 * (k + 1)), level_norm, octant, position);
  padding[0] = 0;
  for (std::size_t r = 1; r < n; ++r) {
    const auto& sib = window[r - 1];
    padding[r] = sib.padding ? 1 : 0;
    if (sib.padding) continue;
    auto row = rows.subspan(r * t, t);
    write_onehot(row.first(255), sib.symbol);
    for (std::size_t a = 0; a < k; ++a) write_onehot(row.subspan(255 * (a + 1), 255), sib.ancestors[a]);
    write_geometry(row.subspan(255 * (k + 1)), sib.level_norm, sib.octant, sib.position);
  }
}

ContextFeatures ancestor_context(const Octree& prefix, NodeRef node, int ancestors) {
  if (ancestors < 1) throw DataError("context: at least one ancestor is required");
  check_node(prefix, node);
  const auto& n = prefix.levels[node.level][node.index];
  ContextFeatures f;
  f.ancestors = collect_ancestors(prefix, node, ancestors);
  f.level_norm = static_cast<double>(node.level) / prefix.depth;
  f.octant = n.octant;
  f.position = normalized_position(n.origin, prefix.depth);
  return f;
}

ContextFeatures sibling_context(const Octree& prefix, NodeRef node, int window, int ancestors) {
  if (window < 0) throw DataError("context: negative window");
  ContextFeatures f = ancestor_context(prefix, node, ancestors);
  f.window.resize(static_cast<std::size_t>(window));
  const std::size_t available = std::min<std::size_t>(node.index, static_cast<std::size_t>(window));
  const std::size_t pad = static_cast<std::size_t>(window) - available;
  for (std::size_t r = 0; r < available; ++r) {
    const NodeRef sib{node.level, static_cast<std::uint32_t>(node.index - available + r)};
    const auto& s = prefix.levels[sib.level][sib.index];
    auto& row = f.window[pad + r];
    row.padding = false;
    row.symbol = s.symbol;
    row.ancestors = collect_ancestors(prefix, sib, ancestors);
    row.level_norm = f.level_norm;
    row.octant = s.octant;
    row.position = normalized_position(s.origin, prefix.depth);
  }
  for (std::size_t r = 0; r < pad; ++r) f.window[r].ancestors.assign(static_cast<std::size_t>(ancestors), 0);
  return f;
}

ContextFeatures node_context(const Octree& prefix, NodeRef node, const ContextConfig& cfg) {
  if (cfg.window == 0) return ancestor_context(prefix, node, cfg.ancestors);
  return sibling_context(prefix, node, cfg.window, cfg.ancestors);
}

}  // namespace pcgc
