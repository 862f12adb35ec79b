#include "pcgc/batch.hpp"

#include <algorithm>

#include "pcgc/error.hpp"

namespace pcgc {

nn::Tensor dense_batch(std::span<const ContextFeatures> ctxs, const ContextConfig& cfg) {
  if (ctxs.empty()) throw DataError("dense_batch: empty batch");
  const std::size_t width = cfg.feature_width();
  nn::Tensor x = nn::Tensor::matrix(ctxs.size(), width);
  for (std::size_t i = 0; i < ctxs.size(); ++i) {
    if (ctxs[i].ancestors.size() != static_cast<std::size_t>(cfg.ancestors)) {
      throw DataError("dense_batch: context ancestor count does not match the layout");
    }
    ctxs[i].write_dense(x.row(i));
  }
  return x;
}

nn::Tensor token_batch(std::span<const ContextFeatures> ctxs, const ContextConfig& cfg,
                       std::vector<std::uint8_t>& padding) {
  if (ctxs.empty()) throw DataError("token_batch: empty batch");
  const std::size_t n = cfg.token_count();
  const std::size_t t = cfg.token_width();
  nn::Tensor x = nn::Tensor::matrix(ctxs.size() * n, t);
  padding.assign(ctxs.size() * n, 0);
  for (std::size_t i = 0; i < ctxs.size(); ++i) {
    ctxs[i].write_tokens(cfg, {x.data() + i * n * t, n * t}, {padding.data() + i * n, n});
  }
  return x;
}

nn::Tensor slice_rows(const nn::Tensor& m, std::size_t first, std::size_t count) {
  nn::Tensor out = nn::Tensor::matrix(count, m.cols());
  std::copy(m.data() + first * m.cols(), m.data() + (first + count) * m.cols(), out.data());
  return out;
}

void add_rows(nn::Tensor& m, std::size_t first, const nn::Tensor& block) {
  double* dst = m.data() + first * m.cols();
  for (std::size_t i = 0; i < block.size(); ++i) dst[i] += block[i];
}

}  // namespace pcgc
