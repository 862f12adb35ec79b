#include "pcgc/acnp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "pcgc/batch.hpp"
#include "pcgc/error.hpp"

namespace pcgc {

int gaussian_center(double n_hat) {
  if (!std::isfinite(n_hat)) throw DataError("gaussian_map: non-finite child-count estimate");
  return static_cast<int>(std::clamp(std::ceil(n_hat), 1.0, 8.0));
}

NumberVector gaussian_map(double n_hat, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DataError("gaussian_map: sigma must be positive");
  const int mu = gaussian_center(n_hat);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
  NumberVector o{};
  for (int k = 1; k <= 8; ++k) {
    const double d = static_cast<double>(k - mu);
    o[k - 1] = norm * std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  return o;
}

NumberVector number_vector(const NumberVector& gaussian) {
  const double mx = *std::max_element(gaussian.begin(), gaussian.end());
  NumberVector v{};
  double sum = 0.0;
  for (int k = 0; k < 8; ++k) {
    if (!std::isfinite(gaussian[k])) throw DataError("number_vector: non-finite input");
    v[k] = std::exp(gaussian[k] - mx);
    sum += v[k];
  }
  for (auto& x : v) x /= sum;
  return v;
}

ChildCountPrediction describe_count(double n_hat, double sigma) {
  ChildCountPrediction p;
  p.n_hat = n_hat;
  p.mu = gaussian_center(n_hat);
  p.gaussian = gaussian_map(n_hat, sigma);
  p.number = number_vector(p.gaussian);
  return p;
}

int true_child_count(OccupancySymbol symbol) {
  if (symbol == 0) throw DataError("true_child_count: symbol 0 is not an occupancy code");
  return std::popcount(static_cast<unsigned>(symbol));
}

AcnpModel::AcnpModel(const AcnpConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  const std::size_t t = cfg.context.token_width();
  const std::size_t d = cfg.attention_dim;
  params_.add("attn.wq", nn::xavier_uniform(t, d, rng));
  params_.add("attn.bq", nn::Tensor({d}));
  params_.add("attn.wk", nn::xavier_uniform(t, d, rng));
  params_.add("attn.bk", nn::Tensor({d}));
  params_.add("attn.wv", nn::xavier_uniform(t, d, rng));
  params_.add("attn.bv", nn::Tensor({d}));
  params_.add("mlp1.w", nn::xavier_uniform(d, cfg.hidden, rng));
  params_.add("mlp1.b", nn::Tensor({cfg.hidden}));
  params_.add("mlp2.w", nn::xavier_uniform(cfg.hidden, 1, rng));
  params_.add("mlp2.b", nn::Tensor({1}));
}

AcnpModel AcnpModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != nn::ModelKind::Acnp) throw DataError("checkpoint is not an ACNP model");
  AcnpConfig cfg;
  cfg.context = ckpt.layout;
  cfg.attention_dim = static_cast<std::size_t>(ckpt.hyper_value("attention_dim"));
  cfg.hidden = static_cast<std::size_t>(ckpt.hyper_value("hidden"));
  cfg.sigma = ckpt.hyper_value("sigma");
  AcnpModel model(cfg, 0);
  for (auto& p : model.params_.params()) {
    const auto& stored = ckpt.params.at(p.name);
    if (stored.value.shape() != p.value.shape()) throw DataError("ACNP checkpoint: shape mismatch for " + p.name);
    p.value = stored.value;
  }
  if (ckpt.params.size() != model.params_.size()) throw DataError("ACNP checkpoint: unexpected parameters");
  return model;
}

nn::Checkpoint AcnpModel::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.kind = nn::ModelKind::Acnp;
  ckpt.layout = cfg_.context;
  ckpt.hyper = {{"attention_dim", static_cast<double>(cfg_.attention_dim)},
                {"hidden", static_cast<double>(cfg_.hidden)},
                {"sigma", cfg_.sigma}};
  for (const auto& p : params_.params()) ckpt.params.add(p.name, p.value);
  return ckpt;
}

std::vector<double> AcnpModel::forward(std::span<const ContextFeatures> ctxs, Cache* cache) const {
  const std::size_t batch = ctxs.size();
  const std::size_t n = cfg_.context.token_count();
  const std::size_t d = cfg_.attention_dim;

  Cache local;
  Cache& c = cache != nullptr ? *cache : local;
  c.tokens = token_batch(ctxs, cfg_.context, c.padding);
  c.q = nn::linear(c.tokens, params_.at("attn.wq").value, params_.at("attn.bq").value);
  c.k = nn::linear(c.tokens, params_.at("attn.wk").value, params_.at("attn.bk").value);
  c.v = nn::linear(c.tokens, params_.at("attn.wv").value, params_.at("attn.bv").value);
  c.attended = nn::Tensor::matrix(batch * n, d);
  c.pooled = nn::Tensor::matrix(batch, d);
  c.attention.assign(cache != nullptr ? batch : 0, {});
  for (std::size_t b = 0; b < batch; ++b) {
    std::span<const std::uint8_t> pad(c.padding.data() + b * n, n);
    nn::AttentionCache ac;
    nn::Tensor out = nn::attention(slice_rows(c.q, b * n, n), slice_rows(c.k, b * n, n),
                                   slice_rows(c.v, b * n, n), pad, cache != nullptr ? &ac : nullptr);
    add_rows(c.attended, b * n, out);
    std::size_t kept = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (pad[r]) continue;
      ++kept;
      for (std::size_t j = 0; j < d; ++j) c.pooled(b, j) += out(r, j);
    }
    for (std::size_t j = 0; j < d; ++j) c.pooled(b, j) /= static_cast<double>(kept);
    if (cache != nullptr) c.attention[b] = std::move(ac);
  }
  c.hidden_pre = nn::linear(c.pooled, params_.at("mlp1.w").value, params_.at("mlp1.b").value);
  c.hidden = nn::relu(c.hidden_pre);
  nn::Tensor out = nn::linear(c.hidden, params_.at("mlp2.w").value, params_.at("mlp2.b").value);
  return {out.values().begin(), out.values().end()};
}

void AcnpModel::backward(const Cache& c, std::span<const double> d_n_hat) {
  const std::size_t batch = c.pooled.rows();
  const std::size_t n = cfg_.context.token_count();
  const std::size_t d = cfg_.attention_dim;
  if (d_n_hat.size() != batch || c.attention.size() != batch) {
    throw DataError("AcnpModel::backward: cache does not match the gradient batch");
  }
  nn::Tensor dout({batch, 1}, std::vector<double>(d_n_hat.begin(), d_n_hat.end()));

  auto& w2 = params_.at("mlp2.w");
  auto& b2 = params_.at("mlp2.b");
  nn::Tensor d_hidden;
  nn::linear_backward(c.hidden, w2.value, dout, &d_hidden, w2.grad, b2.grad);
  nn::Tensor d_hidden_pre = nn::relu_backward(c.hidden_pre, d_hidden);
  auto& w1 = params_.at("mlp1.w");
  auto& b1 = params_.at("mlp1.b");
  nn::Tensor d_pooled;
  nn::linear_backward(c.pooled, w1.value, d_hidden_pre, &d_pooled, w1.grad, b1.grad);

  nn::Tensor dq = nn::Tensor::matrix(batch * n, d);
  nn::Tensor dk = nn::Tensor::matrix(batch * n, d);
  nn::Tensor dv = nn::Tensor::matrix(batch * n, d);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::uint8_t* pad = c.padding.data() + b * n;
    std::size_t kept = 0;
    for (std::size_t r = 0; r < n; ++r) kept += pad[r] ? 0 : 1;
    nn::Tensor d_att = nn::Tensor::matrix(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      if (pad[r]) continue;
      for (std::size_t j = 0; j < d; ++j) d_att(r, j) = d_pooled(b, j) / static_cast<double>(kept);
    }
    auto g = nn::attention_backward(slice_rows(c.q, b * n, n), slice_rows(c.k, b * n, n),
                                    slice_rows(c.v, b * n, n), c.attention[b], d_att);
    add_rows(dq, b * n, g.dq);
    add_rows(dk, b * n, g.dk);
    add_rows(dv, b * n, g.dv);
  }
  for (const char* name : {"q", "k", "v"}) {
    auto& w = params_.at(std::string("attn.w") + name);
    auto& bias = params_.at(std::string("attn.b") + name);
    const nn::Tensor& grad = name[0] == 'q' ? dq : name[0] == 'k' ? dk : dv;
    nn::linear_backward(c.tokens, w.value, grad, nullptr, w.grad, bias.grad);
  }
}

double AcnpModel::predict_child_count(const ContextFeatures& ctx) const {
  return forward(std::span<const ContextFeatures>(&ctx, 1)).front();
}

ChildCountPrediction AcnpModel::predict(const ContextFeatures& ctx) const {
  return describe_count(predict_child_count(ctx), cfg_.sigma);
}

std::vector<NumberVector> AcnpModel::number_vectors(std::span<const ContextFeatures> ctxs) const {
  std::vector<NumberVector> out;
  if (ctxs.empty()) return out;
  const auto n_hat = forward(ctxs);
  out.reserve(n_hat.size());
  for (double n : n_hat) out.push_back(number_vector(gaussian_map(n, cfg_.sigma)));
  return out;
}

}  // namespace pcgc
