#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcgc/octree.hpp"
#include "pcgc/random.hpp"

namespace pcgc::nn {

// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) { return Tensor({rows, cols}, fill); }
  static Tensor vector(std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * shape_[1], shape_[1]}; }

  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// ---- differentiable operations -------------------------------------------
// Each *_backward takes the forward inputs (or outputs) plus the upstream
// gradient. Parameter gradients are accumulated (+=) into the given tensors.

// y = x W + b with x [batch, in], W [in, out], b [out]. Zero entries of x are
// skipped, which makes one-hot context inputs cheap. Per-row results do not
// depend on the batch they are computed in.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
// dx may be null when the input gradient is not needed.
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor& dw, Tensor& db);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

// axis 0 or 1 for matrices; a rank-1 tensor is one row.
Tensor softmax(const Tensor& x, int axis = -1);
Tensor softmax_backward(const Tensor& y, const Tensor& dy, int axis = -1);

// softmax(q k^T / sqrt(d) + mask) v. q is [nq, d], k and v are [nk, d];
// padding[j] != 0 removes key j. At least one key must remain.
struct AttentionCache {
  Tensor weights;  // [nq, nk]
};
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const std::uint8_t> padding,
                 AttentionCache* cache = nullptr);
struct AttentionGrads {
  Tensor dq, dk, dv;
};
AttentionGrads attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionCache& cache,
                                  const Tensor& dout);

struct LossResult {
  double value = 0.0;
  Tensor grad;
};

// Probability floor applied before every log.
constexpr double kProbFloor = 1e-12;

// Sum over rows of -log2 p(label), p = softmax(logits) floored at 1e-12.
// logits [batch, 255], labels are symbols in [1, 255].
LossResult cross_entropy_255(const Tensor& logits, std::span<const OccupancySymbol> labels);
// Same loss on explicit probability rows; no gradient.
double cross_entropy_255_probs(const Tensor& probs, std::span<const OccupancySymbol> labels);

// (1/m) sum (target - pred)^2; grad is w.r.t. pred.
LossResult mse(const Tensor& pred, const Tensor& target);

// ---- parameters and optimizer --------------------------------------------

struct AdamConfig;

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
};

class ParamSet {
 public:
  Param& add(std::string name, Tensor init);
  Param& at(std::string_view name);
  const Param& at(std::string_view name) const;
  const Param* find(std::string_view name) const;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  // Zeroes every gradient and marks them as populated for the next step.
  void zero_grad();
  bool grads_ready() const { return grads_ready_; }
  std::int64_t step() const { return step_; }

  // Parameter values only; used for structural comparisons in tests.
  bool same_values(const ParamSet& other) const;

 private:
  friend void adam_step(ParamSet&, const AdamConfig&);

  std::vector<Param> params_;
  std::int64_t step_ = 0;
  bool grads_ready_ = false;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Throws DataError unless zero_grad() preceded this
// step's backward pass.
void adam_step(ParamSet& params, const AdamConfig& cfg);

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace pcgc::nn
