#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcgc/acnp.hpp"
#include "pcgc/context_model.hpp"
#include "pcgc/entropy_coder.hpp"
#include "pcgc/pointcloud_io.hpp"

namespace pcgc {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);

enum class CodecModelKind : std::uint8_t { Baseline = 0, Acnp = 1 };

// The context model plus, for the enhanced kind, the frozen ACNP module.
// The digest covers the serialized context-model checkpoint followed by the
// ACNP checkpoint, so a stream can only be decoded with the exact pair it
// was encoded with.
class CodecModels {
 public:
  static CodecModels from_checkpoints(std::span<const std::uint8_t> model_ckpt,
                                      std::optional<std::span<const std::uint8_t>> acnp_ckpt = std::nullopt);
  static CodecModels from_models(const ContextModel& model, const std::optional<AcnpModel>& acnp = std::nullopt);

  CodecModelKind kind() const { return acnp_ ? CodecModelKind::Acnp : CodecModelKind::Baseline; }
  const ContextConfig& context() const { return model_.config().context; }
  const Digest& digest() const { return digest_; }
  const ContextModel& model() const { return model_; }
  const std::optional<AcnpModel>& acnp() const { return acnp_; }

  std::vector<ProbDist255> predict(std::span<const ContextFeatures> ctxs) const;

 private:
  CodecModels(ContextModel model, std::optional<AcnpModel> acnp, const Digest& digest);

  ContextModel model_;
  std::optional<AcnpModel> acnp_;
  Digest digest_{};
};

// Byte layout (integers little-endian):
//   "ACNP" | version u8 | depth u8 | model-kind u8 | K u8 | W u16 |
//   checkpoint digest 32 bytes | origin 3 x f64 | scale f64 |
//   payload bit length u64 | payload bytes
struct ContainerHeader {
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kSize = 82;

  std::uint8_t version = kVersion;
  std::uint8_t depth = 0;
  CodecModelKind kind = CodecModelKind::Baseline;
  std::uint8_t ancestors = 0;
  std::uint16_t window = 0;
  Digest digest{};
  Vec3 origin{0.0, 0.0, 0.0};
  double scale = 1.0;
  std::uint64_t payload_bits = 0;

  bool operator==(const ContainerHeader&) const = default;
};

struct CompressedCloud {
  ContainerHeader header;
  Bitstream payload;

  bool operator==(const CompressedCloud&) const = default;
};

std::vector<std::uint8_t> serialize_container(const CompressedCloud& cc);
CompressedCloud parse_container(std::span<const std::uint8_t> bytes);

struct EncodeStats {
  std::size_t points = 0;
  std::size_t nodes = 0;
  double model_bits = 0.0;      // sum of -log2 p(s) under the float model
  double quantized_bits = 0.0;  // sum of -log2 q(s) under the coded tables
  std::uint64_t payload_bits = 0;
  std::uint64_t header_bits = ContainerHeader::kSize * 8;
};

struct EncodeResult {
  CompressedCloud compressed;
  EncodeStats stats;
};

EncodeResult encode_cloud_with_stats(const QuantizedCloud& cloud, const CodecModels& models);
CompressedCloud encode_cloud(const QuantizedCloud& cloud, const CodecModels& models);

struct DecodeOptions {
  // Tests switch this off to exercise the structural checks with a
  // deliberately mismatched model.
  bool verify_digest = true;
};

QuantizedCloud decode_cloud(const CompressedCloud& cc, const CodecModels& models, const DecodeOptions& opts = {});

// Payload bits per input point (header excluded).
double bpip(const CompressedCloud& cc, std::size_t point_count);

// Relative change in percent; negative means b is smaller than a.
double gain_percent(double reference, double candidate);

}  // namespace pcgc
