#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pcgc {

using Vec3 = std::array<double, 3>;
using Voxel = std::array<std::uint32_t, 3>;

constexpr int kMinDepth = 1;
constexpr int kMaxDepth = 16;

struct RawCloud {
  std::vector<Vec3> points;

  std::size_t count() const { return points.size(); }
};

// Deduplicated voxel coordinates, sorted lexicographically by (x, y, z).
// origin + scale * voxel recovers the real-valued position.
struct QuantizedCloud {
  int depth = 1;
  std::vector<Voxel> points;
  Vec3 origin{0.0, 0.0, 0.0};
  double scale = 1.0;

  bool operator==(const QuantizedCloud&) const = default;
};

// ASCII PLY with float/double (or integer) x, y, z on element "vertex".
// Other properties and elements are skipped. Throws ParseError.
RawCloud parse_ply(std::string_view text);
RawCloud read_ply(const std::filesystem::path& path);
std::string format_ply(const RawCloud& cloud);

QuantizedCloud quantize(const RawCloud& cloud, int depth);
RawCloud dequantize(const QuantizedCloud& cloud);

// Sorts and deduplicates in place.
void canonicalize(std::vector<Voxel>& points);

// Quantized clouds are stored as ASCII PLY with integer coordinates; depth,
// origin and scale travel in header comments so the file stays a valid PLY.
std::string format_quantized(const QuantizedCloud& cloud);
QuantizedCloud parse_quantized(std::string_view text);
QuantizedCloud read_quantized(const std::filesystem::path& path);
void write_quantized(const std::filesystem::path& path, const QuantizedCloud& cloud);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace pcgc
