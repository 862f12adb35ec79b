#include "pcgc/context_model.hpp"

#include <algorithm>
#include <cmath>

#include "pcgc/batch.hpp"
#include "pcgc/error.hpp"

namespace pcgc {

ContextModel::ContextModel(const ContextModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  std::size_t extract_in = cfg.context.feature_width();
  if (cfg.context.window > 0) {
    const std::size_t t = cfg.context.token_width();
    const std::size_t d = cfg.attention_dim;
    params_.add("attn.wq", nn::xavier_uniform(t, d, rng));
    params_.add("attn.bq", nn::Tensor({d}));
    params_.add("attn.wk", nn::xavier_uniform(t, d, rng));
    params_.add("attn.bk", nn::Tensor({d}));
    params_.add("attn.wv", nn::xavier_uniform(t, d, rng));
    params_.add("attn.bv", nn::Tensor({d}));
    extract_in = d;
  }
  params_.add("extract1.w", nn::xavier_uniform(extract_in, cfg.extract1, rng));
  params_.add("extract1.b", nn::Tensor({cfg.extract1}));
  params_.add("extract2.w", nn::xavier_uniform(cfg.extract1, cfg.extract2, rng));
  params_.add("extract2.b", nn::Tensor({cfg.extract2}));
  // Shared weights are drawn exactly as for the baseline and the V rows start
  // at zero, so an enhanced model initially computes the baseline's function.
  nn::Tensor agg = nn::xavier_uniform(cfg.extract2, cfg.aggregate, rng);
  if (cfg.enhanced) {
    nn::Tensor widened = nn::Tensor::matrix(cfg.extract2 + 8, cfg.aggregate);
    std::copy(agg.values().begin(), agg.values().end(), widened.values().begin());
    agg = std::move(widened);
  }
  params_.add("aggregate.w", std::move(agg));
  params_.add("aggregate.b", nn::Tensor({cfg.aggregate}));
  params_.add("output.w", nn::xavier_uniform(cfg.aggregate, kNumSymbols, rng));
  params_.add("output.b", nn::Tensor({static_cast<std::size_t>(kNumSymbols)}));
}

ContextModel ContextModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind == nn::ModelKind::Acnp) throw DataError("checkpoint holds an ACNP model, not a context model");
  ContextModelConfig cfg;
  cfg.context = ckpt.layout;
  cfg.enhanced = ckpt.kind == nn::ModelKind::ContextEnhanced;
  cfg.extract1 = static_cast<std::size_t>(ckpt.hyper_value("extract1"));
  cfg.extract2 = static_cast<std::size_t>(ckpt.hyper_value("extract2"));
  cfg.aggregate = static_cast<std::size_t>(ckpt.hyper_value("aggregate"));
  cfg.attention_dim = static_cast<std::size_t>(ckpt.hyper_value("attention_dim"));
  ContextModel model(cfg, 0);
  if (ckpt.params.size() != model.params_.size()) throw DataError("context-model checkpoint: unexpected parameters");
  for (auto& p : model.params_.params()) {
    const auto& stored = ckpt.params.at(p.name);
    if (stored.value.shape() != p.value.shape()) {
      throw DataError("context-model checkpoint: shape mismatch for " + p.name);
    }
    p.value = stored.value;
  }
  return model;
}

nn::Checkpoint ContextModel::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.kind = cfg_.enhanced ? nn::ModelKind::ContextEnhanced : nn::ModelKind::ContextBaseline;
  ckpt.layout = cfg_.context;
  ckpt.hyper = {{"extract1", static_cast<double>(cfg_.extract1)},
                {"extract2", static_cast<double>(cfg_.extract2)},
                {"aggregate", static_cast<double>(cfg_.aggregate)},
                {"attention_dim", static_cast<double>(cfg_.attention_dim)}};
  for (const auto& p : params_.params()) ckpt.params.add(p.name, p.value);
  return ckpt;
}

void ContextModel::zero_output_layer() {
  params_.at("output.w").value.fill(0.0);
  params_.at("output.b").value.fill(0.0);
}

nn::Tensor ContextModel::extract(std::span<const ContextFeatures> ctxs, Cache& c) const {
  if (cfg_.context.window == 0) {
    c.input = dense_batch(ctxs, cfg_.context);
    return c.input;
  }
  const std::size_t batch = ctxs.size();
  const std::size_t n = cfg_.context.token_count();
  const std::size_t d = cfg_.attention_dim;
  c.input = token_batch(ctxs, cfg_.context, c.padding);
  c.self_rows = nn::Tensor::matrix(batch, c.input.cols());
  for (std::size_t b = 0; b < batch; ++b) {
    auto src = c.input.row(b * n);
    std::copy(src.begin(), src.end(), c.self_rows.row(b).begin());
  }
  c.q = nn::linear(c.self_rows, params_.at("attn.wq").value, params_.at("attn.bq").value);
  c.k = nn::linear(c.input, params_.at("attn.wk").value, params_.at("attn.bk").value);
  c.v = nn::linear(c.input, params_.at("attn.wv").value, params_.at("attn.bv").value);
  c.attended = nn::Tensor::matrix(batch, d);
  c.attention.assign(batch, {});
  for (std::size_t b = 0; b < batch; ++b) {
    std::span<const std::uint8_t> pad(c.padding.data() + b * n, n);
    nn::Tensor out = nn::attention(slice_rows(c.q, b, 1), slice_rows(c.k, b * n, n), slice_rows(c.v, b * n, n),
                                   pad, &c.attention[b]);
    add_rows(c.attended, b, out);
  }
  return c.attended;
}

nn::Tensor ContextModel::forward_logits(std::span<const ContextFeatures> ctxs, const nn::Tensor* number_vectors,
                                        Cache* cache) const {
  if (ctxs.empty()) throw DataError("context model: empty batch");
  if (cfg_.enhanced != (number_vectors != nullptr)) {
    throw DataError(cfg_.enhanced ? "enhanced context model requires number vectors"
                                  : "baseline context model takes no number vectors");
  }
  if (number_vectors != nullptr &&
      (number_vectors->rank() != 2 || number_vectors->rows() != ctxs.size() || number_vectors->cols() != 8)) {
    throw DataError("context model: number vectors must be [batch, 8]");
  }
  for (const auto& ctx : ctxs) {
    if (ctx.ancestors.size() != static_cast<std::size_t>(cfg_.context.ancestors) ||
        ctx.window.size() != static_cast<std::size_t>(cfg_.context.window)) {
      throw DataError("context model: context layout does not match the model");
    }
  }
  Cache local;
  Cache& c = cache != nullptr ? *cache : local;
  const nn::Tensor features = extract(ctxs, c);
  c.h1_pre = nn::linear(features, params_.at("extract1.w").value, params_.at("extract1.b").value);
  c.h1 = nn::relu(c.h1_pre);
  c.h2_pre = nn::linear(c.h1, params_.at("extract2.w").value, params_.at("extract2.b").value);
  c.h2 = nn::relu(c.h2_pre);
  if (cfg_.enhanced) {
    const std::size_t w = cfg_.extract2;
    c.joined = nn::Tensor::matrix(ctxs.size(), w + 8);
    for (std::size_t b = 0; b < ctxs.size(); ++b) {
      auto row = c.joined.row(b);
      std::copy(c.h2.row(b).begin(), c.h2.row(b).end(), row.begin());
      std::copy(number_vectors->row(b).begin(), number_vectors->row(b).end(), row.begin() + w);
    }
  } else {
    c.joined = c.h2;
  }
  c.agg_pre = nn::linear(c.joined, params_.at("aggregate.w").value, params_.at("aggregate.b").value);
  c.agg = nn::relu(c.agg_pre);
  return nn::linear(c.agg, params_.at("output.w").value, params_.at("output.b").value);
}

void ContextModel::backward(const Cache& c, const nn::Tensor& d_logits) {
  auto grad_pair = [&](const char* layer) -> std::pair<nn::Param&, nn::Param&> {
    return {params_.at(std::string(layer) + ".w"), params_.at(std::string(layer) + ".b")};
  };
  nn::Tensor d_agg, d_joined, d_h1, d_features;
  {
    auto [w, b] = grad_pair("output");
    nn::linear_backward(c.agg, w.value, d_logits, &d_agg, w.grad, b.grad);
  }
  {
    auto [w, b] = grad_pair("aggregate");
    nn::linear_backward(c.joined, w.value, nn::relu_backward(c.agg_pre, d_agg), &d_joined, w.grad, b.grad);
  }
  nn::Tensor d_h2 = d_joined;
  if (cfg_.enhanced) {
    d_h2 = nn::Tensor::matrix(c.h2.rows(), c.h2.cols());
    for (std::size_t r = 0; r < c.h2.rows(); ++r) {
      auto src = d_joined.row(r);
      std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(c.h2.cols()), d_h2.row(r).begin());
    }
  }
  {
    auto [w, b] = grad_pair("extract2");
    nn::linear_backward(c.h1, w.value, nn::relu_backward(c.h2_pre, d_h2), &d_h1, w.grad, b.grad);
  }
  const bool windowed = cfg_.context.window > 0;
  {
    auto [w, b] = grad_pair("extract1");
    const nn::Tensor& in = windowed ? c.attended : c.input;
    nn::linear_backward(in, w.value, nn::relu_backward(c.h1_pre, d_h1), windowed ? &d_features : nullptr, w.grad,
                        b.grad);
  }
  if (!windowed) return;

  const std::size_t batch = c.attended.rows();
  const std::size_t n = cfg_.context.token_count();
  const std::size_t d = cfg_.attention_dim;
  nn::Tensor dq = nn::Tensor::matrix(batch, d);
  nn::Tensor dk = nn::Tensor::matrix(batch * n, d);
  nn::Tensor dv = nn::Tensor::matrix(batch * n, d);
  for (std::size_t b = 0; b < batch; ++b) {
    auto g = nn::attention_backward(slice_rows(c.q, b, 1), slice_rows(c.k, b * n, n), slice_rows(c.v, b * n, n),
                                    c.attention[b], slice_rows(d_features, b, 1));
    add_rows(dq, b, g.dq);
    add_rows(dk, b * n, g.dk);
    add_rows(dv, b * n, g.dv);
  }
  auto& wq = params_.at("attn.wq");
  auto& bq = params_.at("attn.bq");
  nn::linear_backward(c.self_rows, wq.value, dq, nullptr, wq.grad, bq.grad);
  auto& wk = params_.at("attn.wk");
  auto& bk = params_.at("attn.bk");
  nn::linear_backward(c.input, wk.value, dk, nullptr, wk.grad, bk.grad);
  auto& wv = params_.at("attn.wv");
  auto& bv = params_.at("attn.bv");
  nn::linear_backward(c.input, wv.value, dv, nullptr, wv.grad, bv.grad);
}

std::vector<ProbDist255> to_distributions(const nn::Tensor& logits) {
  const nn::Tensor probs = nn::softmax(logits, 1);
  std::vector<ProbDist255> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto row = probs.row(i);
    std::copy(row.begin(), row.end(), out[i].p.begin());
  }
  return out;
}

std::vector<ProbDist255> ContextModel::forward_baseline(std::span<const ContextFeatures> ctxs) const {
  if (cfg_.enhanced) throw DataError("forward_baseline called on an enhanced context model");
  return to_distributions(forward_logits(ctxs, nullptr));
}

void check_number_vector(const NumberVector& v) {
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw DataError("number vector has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw DataError("number vector is not normalized");
}

std::vector<ProbDist255> ContextModel::forward_acnp(std::span<const ContextFeatures> ctxs,
                                                    std::span<const NumberVector> number_vectors) const {
  if (!cfg_.enhanced) throw DataError("forward_acnp called on a baseline context model");
  if (number_vectors.size() != ctxs.size()) throw DataError("forward_acnp: one number vector per context");
  nn::Tensor v = nn::Tensor::matrix(ctxs.size(), 8);
  for (std::size_t i = 0; i < ctxs.size(); ++i) {
    check_number_vector(number_vectors[i]);
    std::copy(number_vectors[i].begin(), number_vectors[i].end(), v.row(i).begin());
  }
  return to_distributions(forward_logits(ctxs, &v));
}

double model_loss(std::span<const ProbDist255> dists, std::span<const OccupancySymbol> symbols) {
  if (dists.size() != symbols.size()) throw DataError("model_loss: batch misaligned");
  if (dists.empty()) return 0.0;
  nn::Tensor probs = nn::Tensor::matrix(dists.size(), kNumSymbols);
  for (std::size_t i = 0; i < dists.size(); ++i) std::copy(dists[i].p.begin(), dists[i].p.end(), probs.row(i).begin());
  return nn::cross_entropy_255_probs(probs, symbols);
}

}  // namespace pcgc
