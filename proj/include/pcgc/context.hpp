#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcgc/octree.hpp"

namespace pcgc {

// Context layout knobs shared by the context model, ACNP and checkpoints.
struct ContextConfig {
  int ancestors = 4;  // K
  int window = 0;     // W; 0 selects the ancestor-only layout

  // 255*K one-hot blocks, level, 8-way octant one-hot, xyz position.
  std::size_t feature_width() const { return 255u * ancestors + 12u; }
  // Attention tokens: one self token plus K ancestor tokens when W == 0,
  // otherwise one self row plus W preceding same-level rows.
  std::size_t token_count() const;
  std::size_t token_width() const;

  bool operator==(const ContextConfig&) const = default;
};

struct SiblingRow {
  bool padding = true;
  OccupancySymbol symbol = 0;  // the sibling's own, already decoded, occupancy
  std::vector<OccupancySymbol> ancestors;
  double level_norm = 0.0;
  std::uint8_t octant = 0;
  Vec3 position{0.0, 0.0, 0.0};

  bool operator==(const SiblingRow&) const = default;
};

struct ContextFeatures {
  std::vector<OccupancySymbol> ancestors;  // parent first; 0 marks padding above the root
  double level_norm = 0.0;                 // level / depth
  std::uint8_t octant = 0;
  Vec3 position{0.0, 0.0, 0.0};            // cell origin / 2^depth
  std::vector<SiblingRow> window;          // oldest first, left-padded

  // Dense ancestor-layout vector of width ContextConfig::feature_width().
  void write_dense(std::span<double> out) const;
  std::vector<double> dense() const;

  // Token rows of shape [token_count, token_width] and a padding mask
  // (1 = padding). `rows` must be zero-filled by the caller.
  void write_tokens(const ContextConfig& cfg, std::span<double> rows, std::span<std::uint8_t> padding) const;

  bool operator==(const ContextFeatures&) const = default;
};

// `prefix` may be a partially decoded tree: only the node's ancestors (and,
// for sibling windows, the preceding nodes of its level) are read. Symbols
// of the node itself and of later nodes are never consulted.
ContextFeatures ancestor_context(const Octree& prefix, NodeRef node, int ancestors);
ContextFeatures sibling_context(const Octree& prefix, NodeRef node, int window, int ancestors);
ContextFeatures node_context(const Octree& prefix, NodeRef node, const ContextConfig& cfg);

}  // namespace pcgc
