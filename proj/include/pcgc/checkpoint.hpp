#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcgc/context.hpp"
#include "pcgc/nn.hpp"

namespace pcgc::nn {

enum class ModelKind : std::uint8_t { ContextBaseline = 0, ContextEnhanced = 1, Acnp = 2 };

const char* to_string(ModelKind kind);

// Binary layout, little-endian:
//   "PCKP" | version u16 | kind u8 | K u8 | W u16 | feature_width u32 |
//   token_count u32 | token_width u32 | n_hyper u32 | (len u8, name, f64)* |
//   n_params u32 | (len u16, name, rank u8, dims u32*, f64 values)*
// Only parameter values are stored; optimizer state is not.
struct Checkpoint {
  static constexpr std::uint16_t kVersion = 1;

  ModelKind kind = ModelKind::ContextBaseline;
  ContextConfig layout;
  std::vector<std::pair<std::string, double>> hyper;
  ParamSet params;

  double hyper_value(std::string_view name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace pcgc::nn
