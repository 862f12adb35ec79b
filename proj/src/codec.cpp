#include "pcgc/codec.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <string>

#include "pcgc/bytes.hpp"
#include "pcgc/error.hpp"

namespace pcgc {

namespace {

constexpr std::size_t kEncodeChunk = 1024;

// Cheapest possible symbol under a 16-bit table with count floor 1.
const double kMinSymbolBits = -std::log2(static_cast<double>(kFreqTotal - 254) / kFreqTotal);

}  // namespace

Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

CodecModels::CodecModels(ContextModel model, std::optional<AcnpModel> acnp, const Digest& digest)
    : model_(std::move(model)), acnp_(std::move(acnp)), digest_(digest) {
  if (model_.config().enhanced != acnp_.has_value()) {
    throw DataError(acnp_ ? "ACNP module supplied for a baseline context model"
                          : "enhanced context model requires an ACNP module");
  }
  if (acnp_ && !(acnp_->config().context == model_.config().context)) {
    throw DataError("ACNP and context model use different context layouts");
  }
}

CodecModels CodecModels::from_checkpoints(std::span<const std::uint8_t> model_ckpt,
                                          std::optional<std::span<const std::uint8_t>> acnp_ckpt) {
  ContextModel model = ContextModel::from_checkpoint(nn::parse_checkpoint(model_ckpt));
  std::optional<AcnpModel> acnp;
  std::vector<std::uint8_t> joined(model_ckpt.begin(), model_ckpt.end());
  if (acnp_ckpt) {
    acnp = AcnpModel::from_checkpoint(nn::parse_checkpoint(*acnp_ckpt));
    joined.insert(joined.end(), acnp_ckpt->begin(), acnp_ckpt->end());
  }
  return CodecModels(std::move(model), std::move(acnp), sha256(joined));
}

CodecModels CodecModels::from_models(const ContextModel& model, const std::optional<AcnpModel>& acnp) {
  const std::string m = nn::serialize_checkpoint(model.to_checkpoint());
  if (!acnp) return from_checkpoints(as_bytes(m));
  const std::string a = nn::serialize_checkpoint(acnp->to_checkpoint());
  return from_checkpoints(as_bytes(m), as_bytes(a));
}

std::vector<ProbDist255> CodecModels::predict(std::span<const ContextFeatures> ctxs) const {
  if (!acnp_) return model_.forward_baseline(ctxs);
  const auto v = acnp_->number_vectors(ctxs);
  return model_.forward_acnp(ctxs, v);
}

std::vector<std::uint8_t> serialize_container(const CompressedCloud& cc) {
  const auto& h = cc.header;
  if (cc.payload.bytes.size() != (h.payload_bits + 7) / 8 || cc.payload.bit_length != h.payload_bits) {
    throw DataError("container: payload length disagrees with the header");
  }
  ByteWriter w;
  w.put_string("ACNP");
  w.put<std::uint8_t>(h.version);
  w.put<std::uint8_t>(h.depth);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(h.kind));
  w.put<std::uint8_t>(h.ancestors);
  w.put<std::uint16_t>(h.window);
  w.put_bytes(h.digest);
  for (double o : h.origin) w.put<double>(o);
  w.put<double>(h.scale);
  w.put<std::uint64_t>(h.payload_bits);
  w.put_bytes(cc.payload.bytes);
  return w.take();
}

CompressedCloud parse_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < ContainerHeader::kSize) throw DataError("container: shorter than its header");
  ByteReader r(bytes);
  if (r.get_string(4) != "ACNP") throw DataError("container: bad magic");
  CompressedCloud cc;
  auto& h = cc.header;
  h.version = r.get<std::uint8_t>();
  if (h.version != ContainerHeader::kVersion) throw DataError("container: unsupported version");
  h.depth = r.get<std::uint8_t>();
  if (h.depth < kMinDepth || h.depth > kMaxDepth) throw DataError("container: depth out of range");
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw DataError("container: unknown model kind");
  h.kind = static_cast<CodecModelKind>(kind);
  h.ancestors = r.get<std::uint8_t>();
  h.window = r.get<std::uint16_t>();
  auto digest = r.get_bytes(32);
  std::copy(digest.begin(), digest.end(), h.digest.begin());
  for (auto& o : h.origin) o = r.get<double>();
  h.scale = r.get<double>();
  h.payload_bits = r.get<std::uint64_t>();
  const std::uint64_t payload_bytes = (h.payload_bits + 7) / 8;
  if (r.remaining() != payload_bytes) {
    throw DataError("container: payload is " + std::to_string(r.remaining()) + " bytes, header announces " +
                    std::to_string(payload_bytes));
  }
  auto payload = r.get_bytes(payload_bytes);
  cc.payload.bytes.assign(payload.begin(), payload.end());
  cc.payload.bit_length = h.payload_bits;
  return cc;
}

EncodeResult encode_cloud_with_stats(const QuantizedCloud& cloud, const CodecModels& models) {
  const Octree tree = build_octree(cloud);
  const ContextConfig& cfg = models.context();

  EncodeResult result;
  auto& stats = result.stats;
  stats.points = cloud.points.size();
  stats.nodes = tree.node_count();

  ArithmeticEncoder enc;
  std::vector<ContextFeatures> ctxs;
  for (std::uint32_t l = 0; l < tree.levels.size(); ++l) {
    const auto& level = tree.levels[l];
    for (std::size_t first = 0; first < level.size(); first += kEncodeChunk) {
      const std::size_t count = std::min(kEncodeChunk, level.size() - first);
      ctxs.clear();
      for (std::size_t i = first; i < first + count; ++i) {
        ctxs.push_back(node_context(tree, {l, static_cast<std::uint32_t>(i)}, cfg));
      }
      const auto dists = models.predict(ctxs);
      for (std::size_t i = 0; i < count; ++i) {
        const OccupancySymbol s = level[first + i].symbol;
        const FreqTable table = quantize_dist(dists[i]);
        stats.model_bits += -std::log2(std::max(dists[i](s), nn::kProbFloor));
        stats.quantized_bits += table.cost_bits(s);
        enc.encode(s, table);
      }
    }
  }

  auto& cc = result.compressed;
  cc.payload = enc.finish();
  auto& h = cc.header;
  h.depth = static_cast<std::uint8_t>(cloud.depth);
  h.kind = models.kind();
  h.ancestors = static_cast<std::uint8_t>(cfg.ancestors);
  h.window = static_cast<std::uint16_t>(cfg.window);
  h.digest = models.digest();
  h.origin = cloud.origin;
  h.scale = cloud.scale;
  h.payload_bits = cc.payload.bit_length;
  stats.payload_bits = cc.payload.bit_length;
  return result;
}

CompressedCloud encode_cloud(const QuantizedCloud& cloud, const CodecModels& models) {
  return encode_cloud_with_stats(cloud, models).compressed;
}

QuantizedCloud decode_cloud(const CompressedCloud& cc, const CodecModels& models, const DecodeOptions& opts) {
  const auto& h = cc.header;
  if (opts.verify_digest && h.digest != models.digest()) {
    throw VerificationError("stream was encoded with model " + to_hex(h.digest) + ", loaded model is " +
                            to_hex(models.digest()));
  }
  if (h.kind != models.kind() || h.ancestors != models.context().ancestors ||
      h.window != models.context().window) {
    throw VerificationError("stream model kind or context layout differs from the loaded model");
  }
  if (h.depth < kMinDepth || h.depth > kMaxDepth) throw DataError("stream depth out of range");
  if (cc.payload.bit_length != h.payload_bits) throw DataError("payload length disagrees with the header");

  const ContextConfig& cfg = models.context();
  const auto node_budget = static_cast<std::size_t>(static_cast<double>(h.payload_bits + 64) / kMinSymbolBits) + 1;

  Octree tree;
  tree.depth = h.depth;
  tree.levels.push_back({OctreeNode{}});
  ArithmeticDecoder dec(cc.payload);
  std::size_t decoded = 0;
  std::vector<ContextFeatures> ctxs;

  auto decode_one = [&](std::uint32_t l, std::size_t i, const ProbDist255& dist) {
    try {
      tree.levels[l][i].symbol = dec.decode(quantize_dist(dist));
    } catch (const VerificationError& e) {
      throw VerificationError(std::string(e.what()) + " (level " + std::to_string(l) + ", node " +
                              std::to_string(i) + ")");
    }
    ++decoded;
  };

  for (std::uint32_t l = 0; l < static_cast<std::uint32_t>(tree.depth); ++l) {
    auto& level = tree.levels[l];
    if (cfg.window == 0) {
      // ancestor-only contexts: the whole level is predictable at once
      for (std::size_t first = 0; first < level.size(); first += kEncodeChunk) {
        const std::size_t count = std::min(kEncodeChunk, level.size() - first);
        ctxs.clear();
        for (std::size_t i = first; i < first + count; ++i) {
          ctxs.push_back(ancestor_context(tree, {l, static_cast<std::uint32_t>(i)}, cfg.ancestors));
        }
        const auto dists = models.predict(ctxs);
        for (std::size_t i = 0; i < count; ++i) decode_one(l, first + i, dists[i]);
      }
    } else {
      for (std::size_t i = 0; i < level.size(); ++i) {
        const ContextFeatures ctx = sibling_context(tree, {l, static_cast<std::uint32_t>(i)}, cfg.window,
                                                    cfg.ancestors);
        decode_one(l, i, models.predict(std::span<const ContextFeatures>(&ctx, 1)).front());
      }
    }
    if (l + 1 < static_cast<std::uint32_t>(tree.depth)) {
      auto next = expand_level(tree.levels[l], tree.depth);
      if (decoded + next.size() > node_budget) {
        throw VerificationError("decoded tree at level " + std::to_string(l + 1) + " needs more nodes than a " +
                                std::to_string(h.payload_bits) + "-bit payload can describe");
      }
      tree.levels.push_back(std::move(next));
    }
  }
  dec.finish();

  QuantizedCloud out = reconstruct_points(tree);
  out.origin = h.origin;
  out.scale = h.scale;
  return out;
}

double bpip(const CompressedCloud& cc, std::size_t point_count) {
  if (point_count == 0) throw DataError("bpip: zero points");
  return static_cast<double>(cc.payload.bit_length) / static_cast<double>(point_count);
}

double gain_percent(double reference, double candidate) {
  if (!(reference > 0.0)) throw DataError("gain_percent: reference must be positive");
  return (candidate - reference) / reference * 100.0;
}

}  // namespace pcgc
