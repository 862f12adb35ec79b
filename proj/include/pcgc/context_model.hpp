#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pcgc/acnp.hpp"
#include "pcgc/checkpoint.hpp"
#include "pcgc/context.hpp"
#include "pcgc/nn.hpp"

namespace pcgc {

// Predicted distribution over occupancy symbols; p[j-1] is the probability
// of symbol j.
struct ProbDist255 {
  std::array<double, kNumSymbols> p{};

  double operator()(OccupancySymbol symbol) const { return p[symbol - 1u]; }
};

struct ContextModelConfig {
  ContextConfig context;
  bool enhanced = false;  // V is concatenated onto the extraction output
  std::size_t extract1 = 128;
  std::size_t extract2 = 128;
  std::size_t aggregate = 128;
  std::size_t attention_dim = 64;  // sibling-window layouts only
};

// Two-stage occupancy model. Extraction: two relu layers over the dense
// ancestor features, or, with a sibling window, an attention read-out of the
// self row over the window followed by the same two layers. Aggregation:
// one relu layer over [extraction | V] and a 255-way output layer.
class ContextModel {
 public:
  ContextModel(const ContextModelConfig& cfg, std::uint64_t seed);

  static ContextModel from_checkpoint(const nn::Checkpoint& ckpt);
  nn::Checkpoint to_checkpoint() const;

  const ContextModelConfig& config() const { return cfg_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  // Sets the output layer to zero so every prediction is uniform.
  void zero_output_layer();

  struct Cache {
    nn::Tensor input;  // dense features, or token rows
    std::vector<std::uint8_t> padding;
    nn::Tensor self_rows, q, k, v, attended;
    std::vector<nn::AttentionCache> attention;
    nn::Tensor h1_pre, h1, h2_pre, h2, joined, agg_pre, agg;
  };

  // number_vectors: [batch, 8] for enhanced models, null otherwise.
  nn::Tensor forward_logits(std::span<const ContextFeatures> ctxs, const nn::Tensor* number_vectors,
                            Cache* cache = nullptr) const;
  // Accumulates parameter gradients for d(loss)/d(logits).
  void backward(const Cache& cache, const nn::Tensor& d_logits);

  std::vector<ProbDist255> forward_baseline(std::span<const ContextFeatures> ctxs) const;
  std::vector<ProbDist255> forward_acnp(std::span<const ContextFeatures> ctxs,
                                        std::span<const NumberVector> number_vectors) const;

 private:
  nn::Tensor extract(std::span<const ContextFeatures> ctxs, Cache& c) const;

  ContextModelConfig cfg_;
  nn::ParamSet params_;
};

// Softmax of logit rows, as distributions.
std::vector<ProbDist255> to_distributions(const nn::Tensor& logits);

// Total -log2 p(symbol) over the batch, in bits.
double model_loss(std::span<const ProbDist255> dists, std::span<const OccupancySymbol> symbols);

// Throws DataError unless v is an 8-way distribution normalized within 1e-6.
void check_number_vector(const NumberVector& v);

}  // namespace pcgc
