#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pcgc/checkpoint.hpp"
#include "pcgc/context.hpp"
#include "pcgc/nn.hpp"

namespace pcgc {

using NumberVector = std::array<double, 8>;  // index k-1 holds the value for k occupied children

struct ChildCountPrediction {
  double n_hat = 0.0;
  int mu = 1;
  NumberVector gaussian{};  // O
  NumberVector number{};    // V = softmax(O)
};

// mu = clamp(ceil(n_hat), 1, 8). Throws DataError on non-finite input.
int gaussian_center(double n_hat);
// O(k) = exp(-(k - mu)^2 / (2 sigma^2)) / sqrt(2 pi sigma^2), k = 1..8.
NumberVector gaussian_map(double n_hat, double sigma = 1.0);
NumberVector number_vector(const NumberVector& gaussian);
ChildCountPrediction describe_count(double n_hat, double sigma = 1.0);
int true_child_count(OccupancySymbol symbol);

struct AcnpConfig {
  ContextConfig context;
  std::size_t attention_dim = 64;
  std::size_t hidden = 128;
  double sigma = 1.0;
};

// Child-count regressor: self-attention over the context tokens (padding
// masked), mean pooling over the kept tokens, then a two-layer MLP that
// emits the scalar count estimate.
class AcnpModel {
 public:
  AcnpModel(const AcnpConfig& cfg, std::uint64_t seed);

  static AcnpModel from_checkpoint(const nn::Checkpoint& ckpt);
  nn::Checkpoint to_checkpoint() const;

  const AcnpConfig& config() const { return cfg_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  struct Cache {
    nn::Tensor tokens, q, k, v, attended, pooled, hidden_pre, hidden;
    std::vector<std::uint8_t> padding;
    std::vector<nn::AttentionCache> attention;
  };

  std::vector<double> forward(std::span<const ContextFeatures> ctxs, Cache* cache = nullptr) const;
  // Accumulates parameter gradients for d(loss)/d(n_hat).
  void backward(const Cache& cache, std::span<const double> d_n_hat);

  double predict_child_count(const ContextFeatures& ctx) const;
  ChildCountPrediction predict(const ContextFeatures& ctx) const;
  // V for each context, the feature consumed by the enhanced context model.
  std::vector<NumberVector> number_vectors(std::span<const ContextFeatures> ctxs) const;

 private:
  AcnpConfig cfg_;
  nn::ParamSet params_;
};

}  // namespace pcgc
