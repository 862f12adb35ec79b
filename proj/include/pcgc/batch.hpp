#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcgc/context.hpp"
#include "pcgc/nn.hpp"

namespace pcgc {

// [batch, feature_width] matrix of dense ancestor-layout features.
nn::Tensor dense_batch(std::span<const ContextFeatures> ctxs, const ContextConfig& cfg);

// [batch * token_count, token_width] token rows and their padding flags.
nn::Tensor token_batch(std::span<const ContextFeatures> ctxs, const ContextConfig& cfg,
                       std::vector<std::uint8_t>& padding);

// Copies `count` rows starting at `first` out of a matrix.
nn::Tensor slice_rows(const nn::Tensor& m, std::size_t first, std::size_t count);
// Adds `block` into rows [first, first + block.rows()) of `m`.
void add_rows(nn::Tensor& m, std::size_t first, const nn::Tensor& block);

}  // namespace pcgc
