#include "pcgc/pointcloud_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "pcgc/error.hpp"

namespace pcgc {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::optional<std::string_view> next() {
    if (pos_ >= text_.size()) return std::nullopt;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_no_;
    return line;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

double parse_real(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("non-numeric value '" + std::string(tok) + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite coordinate", line);
  return v;
}

std::size_t parse_count(std::string_view tok, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("bad element count '" + std::string(tok) + "'", line);
  }
  return v;
}

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
};

struct PlyHeader {
  std::vector<Element> elements;
  std::vector<std::string> comments;
};

PlyHeader parse_header(LineReader& reader) {
  auto first = reader.next();
  if (!first || split_ws(*first) != std::vector<std::string_view>{"ply"}) {
    throw ParseError("missing 'ply' magic", 1);
  }
  PlyHeader header;
  bool format_seen = false;
  while (true) {
    auto line = reader.next();
    if (!line) throw ParseError("unterminated header", reader.line_no());
    auto toks = split_ws(*line);
    if (toks.empty()) continue;
    if (toks[0] == "end_header") break;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii") {
        throw ParseError("only ASCII PLY is supported", reader.line_no());
      }
      format_seen = true;
    } else if (toks[0] == "comment" || toks[0] == "obj_info") {
      std::string_view rest = *line;
      rest.remove_prefix(std::min(rest.size(), rest.find(toks[0]) + toks[0].size()));
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
      while (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
      header.comments.emplace_back(rest);
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw ParseError("malformed element line", reader.line_no());
      header.elements.push_back({std::string(toks[1]), parse_count(toks[2], reader.line_no()), {}});
    } else if (toks[0] == "property") {
      if (header.elements.empty()) throw ParseError("property before element", reader.line_no());
      if (toks.size() < 3) throw ParseError("malformed property line", reader.line_no());
      header.elements.back().properties.emplace_back(toks.back());
    } else {
      throw ParseError("unknown header keyword '" + std::string(toks[0]) + "'", reader.line_no());
    }
  }
  if (!format_seen) throw ParseError("missing format line", reader.line_no());
  return header;
}

RawCloud read_vertices(LineReader& reader, const PlyHeader& header) {
  RawCloud cloud;
  bool vertex_seen = false;
  for (const auto& el : header.elements) {
    if (el.name != "vertex") {
      for (std::size_t i = 0; i < el.count; ++i) {
        if (!reader.next()) throw ParseError("unexpected end of file in element " + el.name, reader.line_no());
      }
      continue;
    }
    vertex_seen = true;
    std::array<std::size_t, 3> idx{};
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
      auto it = std::find(el.properties.begin(), el.properties.end(), names[a]);
      if (it == el.properties.end()) {
        throw ParseError(std::string("vertex element lacks property ") + names[a], reader.line_no());
      }
      idx[a] = static_cast<std::size_t>(it - el.properties.begin());
    }
    cloud.points.reserve(el.count);
    for (std::size_t i = 0; i < el.count; ++i) {
      auto line = reader.next();
      if (!line) {
        throw ParseError("vertex count mismatch: expected " + std::to_string(el.count) + ", got " +
                             std::to_string(i),
                         reader.line_no());
      }
      auto toks = split_ws(*line);
      if (toks.size() != el.properties.size()) {
        throw ParseError("expected " + std::to_string(el.properties.size()) + " values, got " +
                             std::to_string(toks.size()),
                         reader.line_no());
      }
      cloud.points.push_back({parse_real(toks[idx[0]], reader.line_no()),
                              parse_real(toks[idx[1]], reader.line_no()),
                              parse_real(toks[idx[2]], reader.line_no())});
    }
  }
  if (!vertex_seen) throw ParseError("no vertex element", reader.line_no());
  while (auto line = reader.next()) {
    if (!split_ws(*line).empty()) throw ParseError("trailing data after last element", reader.line_no());
  }
  return cloud;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

RawCloud parse_ply(std::string_view text) {
  LineReader reader(text);
  PlyHeader header = parse_header(reader);
  return read_vertices(reader, header);
}

RawCloud read_ply(const std::filesystem::path& path) { return parse_ply(read_file(path)); }

std::string format_ply(const RawCloud& cloud) {
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.count()
     << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (const auto& p : cloud.points) {
    os << format_real(p[0]) << ' ' << format_real(p[1]) << ' ' << format_real(p[2]) << '\n';
  }
  return os.str();
}

void canonicalize(std::vector<Voxel>& points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
}

QuantizedCloud quantize(const RawCloud& cloud, int depth) {
  if (cloud.count() == 0) throw DataError("quantize: empty cloud");
  if (depth < kMinDepth || depth > kMaxDepth) {
    throw DataError("quantize: depth " + std::to_string(depth) + " outside [1,16]");
  }
  Vec3 lo = cloud.points.front();
  Vec3 hi = lo;
  for (const auto& p : cloud.points) {
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(p[a])) throw DataError("quantize: non-finite coordinate");
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  const double span = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  const std::uint32_t max_coord = (std::uint32_t{1} << depth) - 1;

  QuantizedCloud out;
  out.depth = depth;
  out.origin = lo;
  out.scale = span > 0.0 ? span / static_cast<double>(max_coord) : 1.0;
  out.points.reserve(cloud.count());
  for (const auto& p : cloud.points) {
    Voxel v{};
    for (int a = 0; a < 3; ++a) {
      const double t = (p[a] - lo[a]) / out.scale;
      // floor with a relative slack of 1e-9 so that dequantized grid points
      // land back in their own cell despite rounding in the division
      double f = std::floor(t);
      if (f + 1.0 - t < 1e-9 * std::max(1.0, t)) f += 1.0;
      v[a] = static_cast<std::uint32_t>(std::clamp(f, 0.0, static_cast<double>(max_coord)));
    }
    out.points.push_back(v);
  }
  canonicalize(out.points);
  return out;
}

RawCloud dequantize(const QuantizedCloud& cloud) {
  RawCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& v : cloud.points) {
    out.points.push_back({cloud.origin[0] + cloud.scale * v[0], cloud.origin[1] + cloud.scale * v[1],
                          cloud.origin[2] + cloud.scale * v[2]});
  }
  return out;
}

std::string format_quantized(const QuantizedCloud& cloud) {
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\n"
     << "comment pcgc depth " << cloud.depth << '\n'
     << "comment pcgc origin " << format_real(cloud.origin[0]) << ' ' << format_real(cloud.origin[1])
     << ' ' << format_real(cloud.origin[2]) << '\n'
     << "comment pcgc scale " << format_real(cloud.scale) << '\n'
     << "element vertex " << cloud.points.size()
     << "\nproperty int x\nproperty int y\nproperty int z\nend_header\n";
  for (const auto& v : cloud.points) os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  return os.str();
}

QuantizedCloud parse_quantized(std::string_view text) {
  LineReader reader(text);
  PlyHeader header = parse_header(reader);
  QuantizedCloud out;
  bool have_depth = false;
  for (const auto& c : header.comments) {
    auto toks = split_ws(c);
    if (toks.size() < 2 || toks[0] != "pcgc") continue;
    if (toks[1] == "depth" && toks.size() == 3) {
      out.depth = static_cast<int>(parse_count(toks[2], 0));
      have_depth = true;
    } else if (toks[1] == "origin" && toks.size() == 5) {
      for (int a = 0; a < 3; ++a) out.origin[a] = parse_real(toks[2 + a], 0);
    } else if (toks[1] == "scale" && toks.size() == 3) {
      out.scale = parse_real(toks[2], 0);
    }
  }
  if (!have_depth) throw DataError("quantized cloud lacks 'comment pcgc depth'");
  if (out.depth < kMinDepth || out.depth > kMaxDepth) throw DataError("quantized cloud depth out of range");
  if (!(out.scale > 0.0)) throw DataError("quantized cloud scale must be positive");

  RawCloud raw = read_vertices(reader, header);
  const double max_coord = static_cast<double>((std::uint32_t{1} << out.depth) - 1);
  out.points.reserve(raw.count());
  for (const auto& p : raw.points) {
    Voxel v{};
    for (int a = 0; a < 3; ++a) {
      if (p[a] < 0.0 || p[a] > max_coord || std::floor(p[a]) != p[a]) {
        throw DataError("quantized coordinate outside the voxel grid");
      }
      v[a] = static_cast<std::uint32_t>(p[a]);
    }
    out.points.push_back(v);
  }
  canonicalize(out.points);
  return out;
}

QuantizedCloud read_quantized(const std::filesystem::path& path) { return parse_quantized(read_file(path)); }

void write_quantized(const std::filesystem::path& path, const QuantizedCloud& cloud) {
  write_file(path, format_quantized(cloud));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace pcgc
