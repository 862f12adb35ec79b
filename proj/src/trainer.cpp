#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcgc/error.hpp"
#include "pcgc/trainer.hpp"

namespace pcgc {

namespace {

constexpr std::size_t kEvalChunk = 1024;

std::vector<ContextFeatures> gather(const std::vector<NodeSample>& samples, std::span<const std::size_t> idx) {
  std::vector<ContextFeatures> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(samples[i].ctx);
  return out;
}

void check_config(const TrainConfig& cfg) {
  if (cfg.epochs <= 0 || !(cfg.lr > 0.0) || !(cfg.decay > 0.0) || cfg.batch == 0) {
    throw DataError("training hyperparameters must be positive");
  }
}

void check_layout(const std::vector<NodeSample>& samples, const ContextConfig& cfg) {
  if (samples.empty()) throw DataError("training set is empty");
  const auto& ctx = samples.front().ctx;
  if (ctx.ancestors.size() != static_cast<std::size_t>(cfg.ancestors) ||
      ctx.window.size() != static_cast<std::size_t>(cfg.window)) {
    throw DataError("samples were collected with a different context layout");
  }
}

nn::Tensor number_matrix(const std::vector<NumberVector>& v, std::span<const std::size_t> idx) {
  nn::Tensor m = nn::Tensor::matrix(idx.size(), 8);
  for (std::size_t r = 0; r < idx.size(); ++r) std::copy(v[idx[r]].begin(), v[idx[r]].end(), m.row(r).begin());
  return m;
}

}  // namespace

std::vector<NodeSample> collect_samples(const std::vector<NamedCloud>& clouds, const ContextConfig& cfg) {
  std::vector<NodeSample> out;
  for (const auto& c : clouds) {
    const Octree tree = build_octree(c.cloud);
    for (const auto& e : symbol_stream(tree)) out.push_back({node_context(tree, e.ref, cfg), e.symbol});
  }
  return out;
}

TrainConfig acnp_defaults() { return TrainConfig{20, 1e-3, 0.93, 256, 1, ContextConfig{}}; }

TrainConfig ancestor_model_defaults() { return TrainConfig{40, 1e-4, 1.0, 4096, 1, ContextConfig{}}; }

TrainConfig window_model_defaults() { return TrainConfig{80, 1e-3, 0.95, 4096, 1, ContextConfig{4, 32}}; }

AcnpTrainResult train_acnp(const std::vector<NodeSample>& samples, const TrainConfig& cfg,
                           const AcnpConfig& model_cfg, const EpochCallback& on_epoch) {
  check_config(cfg);
  check_layout(samples, model_cfg.context);
  if (!(cfg.context == model_cfg.context)) throw DataError("train_acnp: training and model layouts differ");
  AcnpTrainResult result{AcnpModel(model_cfg, cfg.seed), {}};
  auto& model = result.model;
  Rng rng(cfg.seed ^ 0xA5A5A5A5ull);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  double lr = cfg.lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double sq_sum = 0.0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch) {
      std::span<const std::size_t> idx(order.data() + first, std::min(cfg.batch, order.size() - first));
      const auto ctxs = gather(samples, idx);
      nn::Tensor target({idx.size()});
      for (std::size_t r = 0; r < idx.size(); ++r) target[r] = true_child_count(samples[idx[r]].symbol);
      model.params().zero_grad();
      AcnpModel::Cache cache;
      const auto n_hat = model.forward(ctxs, &cache);
      const auto loss = nn::mse(nn::Tensor({idx.size()}, n_hat), target);
      sq_sum += loss.value * static_cast<double>(idx.size());
      model.backward(cache, loss.grad.values());
      nn::adam_step(model.params(), {lr});
    }
    const double epoch_mse = sq_sum / static_cast<double>(samples.size());
    result.log.epoch_loss.push_back(epoch_mse);
    if (on_epoch) on_epoch(epoch, epoch_mse);
    lr *= cfg.decay;
  }
  return result;
}

AcnpEval evaluate_acnp(const AcnpModel& model, const std::vector<NodeSample>& samples) {
  if (samples.empty()) throw DataError("evaluate_acnp: no samples");
  AcnpEval eval;
  for (std::size_t first = 0; first < samples.size(); first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, samples.size() - first);
    std::vector<ContextFeatures> ctxs;
    for (std::size_t i = first; i < first + count; ++i) ctxs.push_back(samples[i].ctx);
    const auto n_hat = model.forward(ctxs);
    for (std::size_t i = 0; i < count; ++i) {
      const double err = n_hat[i] - true_child_count(samples[first + i].symbol);
      eval.mse += err * err;
      eval.mean_abs_error += std::abs(err);
    }
  }
  eval.mse /= static_cast<double>(samples.size());
  eval.mean_abs_error /= static_cast<double>(samples.size());
  return eval;
}

std::vector<NumberVector> number_vectors_for(const std::vector<NodeSample>& samples, const NumberFeed& feed) {
  std::vector<NumberVector> out;
  out.reserve(samples.size());
  switch (feed.source) {
    case NumberSource::None:
      throw DataError("number_vectors_for: no source configured");
    case NumberSource::Oracle:
      for (const auto& s : samples) {
        NumberVector v{};
        v[true_child_count(s.symbol) - 1] = 1.0;
        out.push_back(v);
      }
      return out;
    case NumberSource::Uniform:
      out.assign(samples.size(), NumberVector{0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125});
      return out;
    case NumberSource::Given:
      if (feed.given == nullptr || feed.given->size() != samples.size()) {
        throw DataError("number_vectors_for: given vectors do not match the samples");
      }
      return *feed.given;
    case NumberSource::Acnp:
      if (feed.acnp == nullptr) throw DataError("number_vectors_for: ACNP source without a model");
      for (std::size_t first = 0; first < samples.size(); first += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, samples.size() - first);
        std::vector<ContextFeatures> ctxs;
        for (std::size_t i = first; i < first + count; ++i) ctxs.push_back(samples[i].ctx);
        for (const auto& v : feed.acnp->number_vectors(ctxs)) out.push_back(v);
      }
      return out;
  }
  return out;
}

ContextTrainResult train_context_model(const std::vector<NodeSample>& samples, const TrainConfig& cfg,
                                       const ContextModelConfig& model_cfg, const NumberFeed& feed,
                                       const EpochCallback& on_epoch) {
  check_config(cfg);
  check_layout(samples, model_cfg.context);
  if (!(cfg.context == model_cfg.context)) throw DataError("train_context_model: training and model layouts differ");
  if (model_cfg.enhanced != (feed.source != NumberSource::None)) {
    throw DataError("train_context_model: enhanced models need a number-vector source, baselines must not have one");
  }
  if (feed.acnp != nullptr && !(feed.acnp->config().context == model_cfg.context)) {
    throw DataError("train_context_model: ACNP layout differs from the context model's");
  }
  // ACNP is frozen here, so V is computed once per node up front.
  std::vector<NumberVector> numbers;
  if (model_cfg.enhanced) numbers = number_vectors_for(samples, feed);

  ContextTrainResult result{ContextModel(model_cfg, cfg.seed), {}};
  auto& model = result.model;
  Rng rng(cfg.seed ^ 0x5A5A5A5Aull);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  double lr = cfg.lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double bits = 0.0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch) {
      std::span<const std::size_t> idx(order.data() + first, std::min(cfg.batch, order.size() - first));
      const auto ctxs = gather(samples, idx);
      std::vector<OccupancySymbol> labels;
      labels.reserve(idx.size());
      for (auto i : idx) labels.push_back(samples[i].symbol);
      nn::Tensor v;
      if (model_cfg.enhanced) v = number_matrix(numbers, idx);
      model.params().zero_grad();
      ContextModel::Cache cache;
      const nn::Tensor logits = model.forward_logits(ctxs, model_cfg.enhanced ? &v : nullptr, &cache);
      auto loss = nn::cross_entropy_255(logits, labels);
      bits += loss.value;
      const double scale = 1.0 / static_cast<double>(idx.size());
      for (auto& g : loss.grad.values()) g *= scale;
      model.backward(cache, loss.grad);
      nn::adam_step(model.params(), {lr});
    }
    const double per_node = bits / static_cast<double>(samples.size());
    result.log.epoch_loss.push_back(per_node);
    if (on_epoch) on_epoch(epoch, per_node);
    lr *= cfg.decay;
  }
  return result;
}

double evaluate_context_model(const ContextModel& model, const std::vector<NodeSample>& samples,
                              const NumberFeed& feed) {
  if (samples.empty()) throw DataError("evaluate_context_model: no samples");
  const bool enhanced = model.config().enhanced;
  if (enhanced != (feed.source != NumberSource::None)) {
    throw DataError("evaluate_context_model: number-vector source does not match the model kind");
  }
  std::vector<NumberVector> numbers;
  if (enhanced) numbers = number_vectors_for(samples, feed);
  double bits = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < samples.size(); first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, samples.size() - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    const auto ctxs = gather(samples, idx);
    std::vector<OccupancySymbol> labels;
    for (auto i : idx) labels.push_back(samples[i].symbol);
    nn::Tensor v;
    if (enhanced) v = number_matrix(numbers, idx);
    bits += nn::cross_entropy_255(model.forward_logits(ctxs, enhanced ? &v : nullptr), labels).value;
  }
  return bits / static_cast<double>(samples.size());
}

}  // namespace pcgc
