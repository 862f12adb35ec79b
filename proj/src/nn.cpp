#include "pcgc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "pcgc/error.hpp"

namespace pcgc::nn {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require(bool ok, const char* what) {
  if (!ok) throw DataError(std::string("nn: ") + what);
}

// View a rank-1 tensor as a single row.
std::pair<std::size_t, std::size_t> as_matrix(const Tensor& t) {
  if (t.rank() == 1) return {1, t.dim(0)};
  require(t.rank() == 2, "expected a rank-1 or rank-2 tensor");
  return {t.rows(), t.cols()};
}

constexpr double kLn2 = 0.69314718055994530942;

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {
  for (auto d : shape_) require(d > 0, "tensor dimensions must be positive");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) require(d > 0, "tensor dimensions must be positive");
  require(data_.size() == product(shape_), "data length does not match shape");
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 2 && w.rank() == 2 && b.rank() == 1, "linear expects x[batch,in], w[in,out], b[out]");
  require(x.cols() == w.rows() && w.cols() == b.dim(0), "linear shape mismatch");
  const std::size_t batch = x.rows(), in = w.rows(), out = w.cols();
  Tensor y = Tensor::matrix(batch, out);
  for (std::size_t i = 0; i < batch; ++i) {
    double* yr = y.data() + i * out;
    const double* xr = x.data() + i * in;
    std::copy(b.data(), b.data() + out, yr);
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = xr[k];
      if (xv == 0.0) continue;
      const double* wr = w.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += xv * wr[j];
    }
  }
  return y;
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor& dw, Tensor& db) {
  const std::size_t batch = x.rows(), in = w.rows(), out = w.cols();
  require(dy.rank() == 2 && dy.rows() == batch && dy.cols() == out, "linear_backward: dy shape mismatch");
  require(dw.shape() == w.shape() && db.size() == out, "linear_backward: gradient buffer mismatch");
  for (std::size_t i = 0; i < batch; ++i) {
    const double* xr = x.data() + i * in;
    const double* g = dy.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) db[j] += g[j];
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = xr[k];
      if (xv == 0.0) continue;
      double* dwr = dw.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) dwr[j] += xv * g[j];
    }
  }
  if (dx == nullptr) return;
  Tensor wt = Tensor::matrix(out, in);
  for (std::size_t k = 0; k < in; ++k) {
    for (std::size_t j = 0; j < out; ++j) wt(j, k) = w(k, j);
  }
  *dx = Tensor::matrix(batch, in);
  for (std::size_t i = 0; i < batch; ++i) {
    double* dxr = dx->data() + i * in;
    const double* g = dy.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) {
      const double gv = g[j];
      if (gv == 0.0) continue;
      const double* wr = wt.data() + j * in;
      for (std::size_t k = 0; k < in; ++k) dxr[k] += gv * wr[k];
    }
  }
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  require(x.shape() == dy.shape(), "relu_backward shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > 0.0)) dx[i] = 0.0;
  }
  return dx;
}

Tensor softmax(const Tensor& x, int axis) {
  auto [rows, cols] = as_matrix(x);
  if (axis < 0) axis = x.rank() == 1 ? 0 : 1;
  require(axis == 1 || (axis == 0 && (x.rank() == 2 || x.rank() == 1)), "softmax axis out of range");
  if (x.rank() == 1) axis = 1;
  Tensor y = x;
  const std::size_t outer = axis == 1 ? rows : cols;
  const std::size_t inner = axis == 1 ? cols : rows;
  const std::size_t stride = axis == 1 ? 1 : cols;
  for (std::size_t o = 0; o < outer; ++o) {
    double* base = y.data() + (axis == 1 ? o * cols : o);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inner; ++i) mx = std::max(mx, base[i * stride]);
    double sum = 0.0;
    for (std::size_t i = 0; i < inner; ++i) {
      base[i * stride] = std::exp(base[i * stride] - mx);
      sum += base[i * stride];
    }
    for (std::size_t i = 0; i < inner; ++i) base[i * stride] /= sum;
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy, int axis) {
  require(y.shape() == dy.shape(), "softmax_backward shape mismatch");
  auto [rows, cols] = as_matrix(y);
  if (axis < 0 || y.rank() == 1) axis = 1;
  Tensor dx = dy;
  const std::size_t outer = axis == 1 ? rows : cols;
  const std::size_t inner = axis == 1 ? cols : rows;
  const std::size_t stride = axis == 1 ? 1 : cols;
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t off = axis == 1 ? o * cols : o;
    double dot = 0.0;
    for (std::size_t i = 0; i < inner; ++i) dot += y[off + i * stride] * dy[off + i * stride];
    for (std::size_t i = 0; i < inner; ++i) {
      dx[off + i * stride] = y[off + i * stride] * (dy[off + i * stride] - dot);
    }
  }
  return dx;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const std::uint8_t> padding,
                 AttentionCache* cache) {
  require(q.rank() == 2 && k.rank() == 2 && v.rank() == 2, "attention expects matrices");
  require(q.cols() == k.cols() && k.rows() == v.rows(), "attention shape mismatch");
  require(padding.empty() || padding.size() == k.rows(), "attention mask length mismatch");
  const std::size_t nq = q.rows(), nk = k.rows(), d = q.cols(), dv = v.cols();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  auto masked = [&](std::size_t j) { return !padding.empty() && padding[j] != 0; };
  bool any = false;
  for (std::size_t j = 0; j < nk; ++j) any = any || !masked(j);
  require(any, "attention: every key is masked");

  Tensor weights = Tensor::matrix(nq, nk);
  for (std::size_t i = 0; i < nq; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nk; ++j) {
      if (masked(j)) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q(i, c) * k(j, c);
      weights(i, j) = s * inv_sqrt_d;
      mx = std::max(mx, weights(i, j));
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < nk; ++j) {
      if (masked(j)) {
        weights(i, j) = 0.0;
        continue;
      }
      weights(i, j) = std::exp(weights(i, j) - mx);
      sum += weights(i, j);
    }
    for (std::size_t j = 0; j < nk; ++j) weights(i, j) /= sum;
  }

  Tensor out = Tensor::matrix(nq, dv);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t j = 0; j < nk; ++j) {
      const double wv = weights(i, j);
      if (wv == 0.0) continue;
      for (std::size_t c = 0; c < dv; ++c) out(i, c) += wv * v(j, c);
    }
  }
  if (cache != nullptr) cache->weights = std::move(weights);
  return out;
}

AttentionGrads attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionCache& cache,
                                  const Tensor& dout) {
  const std::size_t nq = q.rows(), nk = k.rows(), d = q.cols(), dv = v.cols();
  require(dout.rank() == 2 && dout.rows() == nq && dout.cols() == dv, "attention_backward: dout shape mismatch");
  const Tensor& w = cache.weights;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  AttentionGrads g{Tensor::matrix(nq, d), Tensor::matrix(nk, d), Tensor::matrix(nk, dv)};
  std::vector<double> dw(nk);
  for (std::size_t i = 0; i < nq; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < nk; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dv; ++c) {
        s += dout(i, c) * v(j, c);
        g.dv(j, c) += w(i, j) * dout(i, c);
      }
      dw[j] = s;
      dot += w(i, j) * s;
    }
    for (std::size_t j = 0; j < nk; ++j) {
      const double ds = w(i, j) * (dw[j] - dot) * inv_sqrt_d;
      if (ds == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) {
        g.dq(i, c) += ds * k(j, c);
        g.dk(j, c) += ds * q(i, c);
      }
    }
  }
  return g;
}

LossResult cross_entropy_255(const Tensor& logits, std::span<const OccupancySymbol> labels) {
  require(logits.rank() == 2 && logits.cols() == kNumSymbols, "cross_entropy_255 expects logits[batch,255]");
  require(logits.rows() == labels.size(), "cross_entropy_255: label count mismatch");
  LossResult r{0.0, Tensor::matrix(logits.rows(), kNumSymbols)};
  const double log_floor = std::log(kProbFloor);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (labels[i] < 1) throw DataError("cross_entropy_255: label outside [1,255]");
    auto z = logits.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double zv : z) sum += std::exp(zv - mx);
    const double lse = mx + std::log(sum);
    const std::size_t t = labels[i] - 1u;
    const double logp = z[t] - lse;
    auto g = r.grad.row(i);
    if (logp < log_floor) {
      r.value += -log_floor / kLn2;
      continue;  // floored: constant in the logits
    }
    r.value += -logp / kLn2;
    for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - lse) / kLn2;
    g[t] -= 1.0 / kLn2;
  }
  if (!std::isfinite(r.value)) throw DataError("cross_entropy_255: non-finite loss");
  return r;
}

double cross_entropy_255_probs(const Tensor& probs, std::span<const OccupancySymbol> labels) {
  require(probs.rank() == 2 && probs.cols() == kNumSymbols, "cross_entropy_255_probs expects probs[batch,255]");
  require(probs.rows() == labels.size(), "cross_entropy_255_probs: label count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (labels[i] < 1) throw DataError("cross_entropy_255_probs: label outside [1,255]");
    total += -std::log2(std::max(probs(i, labels[i] - 1u), kProbFloor));
  }
  return total;
}

LossResult mse(const Tensor& pred, const Tensor& target) {
  require(pred.size() == target.size() && pred.size() > 0, "mse: length mismatch");
  const double m = static_cast<double>(pred.size());
  LossResult r{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - target[i];
    r.value += diff * diff;
    r.grad[i] = 2.0 * diff / m;
  }
  r.value /= m;
  return r;
}

Param& ParamSet::add(std::string name, Tensor init) {
  require(find(name) == nullptr, "duplicate parameter name");
  Param p;
  p.name = std::move(name);
  p.grad = Tensor(init.shape());
  p.m = Tensor(init.shape());
  p.v = Tensor(init.shape());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.back();
}

const Param* ParamSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Param& ParamSet::at(std::string_view name) const {
  const Param* p = find(name);
  if (p == nullptr) throw DataError("nn: unknown parameter " + std::string(name));
  return *p;
}

Param& ParamSet::at(std::string_view name) { return const_cast<Param&>(std::as_const(*this).at(name)); }

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
  grads_ready_ = true;
}

bool ParamSet::same_values(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || !(params_[i].value == other.params_[i].value)) return false;
  }
  return true;
}

void adam_step(ParamSet& params, const AdamConfig& cfg) {
  if (!params.grads_ready_) throw DataError("adam_step: gradients have not been populated");
  ++params.step_;
  const double t = static_cast<double>(params.step_);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& p : params.params_) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.m[i] = cfg.beta1 * p.m[i] + (1.0 - cfg.beta1) * g;
      p.v[i] = cfg.beta2 * p.v[i] + (1.0 - cfg.beta2) * g * g;
      p.value[i] -= cfg.lr * (p.m[i] / c1) / (std::sqrt(p.v[i] / c2) + cfg.eps);
    }
  }
  params.grads_ready_ = false;
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w = Tensor::matrix(fan_in, fan_out);
  for (auto& v : w.values()) v = rng.uniform(-limit, limit);
  return w;
}

}  // namespace pcgc::nn
