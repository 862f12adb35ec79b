#include "pcgc/checkpoint.hpp"

#include "pcgc/bytes.hpp"
#include "pcgc/error.hpp"

namespace pcgc::nn {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ContextBaseline:
      return "context-baseline";
    case ModelKind::ContextEnhanced:
      return "context-acnp";
    case ModelKind::Acnp:
      return "acnp";
  }
  return "unknown";
}

double Checkpoint::hyper_value(std::string_view name) const {
  for (const auto& [k, v] : hyper) {
    if (k == name) return v;
  }
  throw DataError("checkpoint: missing hyperparameter " + std::string(name));
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.put_string("PCKP");
  w.put<std::uint16_t>(Checkpoint::kVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ckpt.kind));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ckpt.layout.ancestors));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(ckpt.layout.window));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.layout.feature_width()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.layout.token_count()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.layout.token_width()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.hyper.size()));
  for (const auto& [name, value] : ckpt.hyper) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(name.size()));
    w.put_string(name);
    w.put<double>(value);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params.params()) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(p.name.size()));
    w.put_string(p.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(p.value.rank()));
    for (auto d : p.value.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (double v : p.value.values()) w.put<double>(v);
  }
  return pcgc::to_string(std::span<const std::uint8_t>(w.bytes()));
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_string(4) != "PCKP") throw DataError("checkpoint: bad magic");
  if (r.get<std::uint16_t>() != Checkpoint::kVersion) throw DataError("checkpoint: unsupported version");
  Checkpoint ckpt;
  const auto kind = r.get<std::uint8_t>();
  if (kind > 2) throw DataError("checkpoint: unknown model kind");
  ckpt.kind = static_cast<ModelKind>(kind);
  ckpt.layout.ancestors = r.get<std::uint8_t>();
  ckpt.layout.window = r.get<std::uint16_t>();
  const auto feature_width = r.get<std::uint32_t>();
  const auto token_count = r.get<std::uint32_t>();
  const auto token_width = r.get<std::uint32_t>();
  if (feature_width != ckpt.layout.feature_width() || token_count != ckpt.layout.token_count() ||
      token_width != ckpt.layout.token_width()) {
    throw DataError("checkpoint: feature layout descriptor is inconsistent with K/W");
  }
  const auto n_hyper = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_hyper; ++i) {
    const auto len = r.get<std::uint8_t>();
    std::string name = r.get_string(len);
    ckpt.hyper.emplace_back(std::move(name), r.get<double>());
  }
  const auto n_params = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const auto len = r.get<std::uint16_t>();
    std::string name = r.get_string(len);
    const auto rank = r.get<std::uint8_t>();
    if (rank == 0 || rank > 4) throw DataError("checkpoint: bad tensor rank for " + name);
    std::vector<std::size_t> shape;
    std::size_t count = 1;
    for (int d = 0; d < rank; ++d) {
      shape.push_back(r.get<std::uint32_t>());
      count *= shape.back();
    }
    if (count * sizeof(double) > r.remaining()) throw DataError("checkpoint: truncated tensor " + name);
    std::vector<double> values(count);
    for (auto& v : values) v = r.get<double>();
    ckpt.params.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw DataError("checkpoint: trailing bytes");
  return ckpt;
}

}  // namespace pcgc::nn
