#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "pcgc/error.hpp"
#include "pcgc/trainer.hpp"

namespace pcgc {

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::vector<double> BenchReport::average_bpip() const {
  std::vector<double> avg(models.size(), 0.0);
  if (rows.empty()) return avg;
  for (const auto& r : rows) {
    for (std::size_t m = 0; m < models.size(); ++m) avg[m] += r.bpip[m];
  }
  for (auto& a : avg) a /= static_cast<double>(rows.size());
  return avg;
}

std::vector<double> BenchReport::average_gain() const {
  const auto avg = average_bpip();
  std::vector<double> gain(models.size(), 0.0);
  if (avg.empty() || rows.empty()) return gain;
  for (std::size_t m = 0; m < models.size(); ++m) gain[m] = gain_percent(avg[0], avg[m]);
  return gain;
}

std::string BenchReport::to_csv() const {
  std::ostringstream os;
  os << "cloud,points,nodes";
  for (const auto& m : models) os << ",bpip_" << m;
  for (std::size_t m = 1; m < models.size(); ++m) os << ",gain_" << models[m] << "_pct";
  os << '\n';
  auto emit = [&](const std::string& name, std::size_t points, std::size_t nodes, const std::vector<double>& bpip) {
    os << name << ',' << points << ',' << nodes;
    for (double b : bpip) os << ',' << fixed(b, 6);
    for (std::size_t m = 1; m < bpip.size(); ++m) os << ',' << fixed(gain_percent(bpip[0], bpip[m]), 4);
    os << '\n';
  };
  for (const auto& r : rows) emit(r.cloud, r.points, r.nodes, r.bpip);
  if (!rows.empty()) emit("average", 0, 0, average_bpip());
  return os.str();
}

std::string BenchReport::to_text() const {
  std::size_t name_w = 7;
  for (const auto& r : rows) name_w = std::max(name_w, r.cloud.size());
  std::size_t col_w = 10;
  for (const auto& m : models) col_w = std::max(col_w, m.size() + 2);

  std::ostringstream os;
  auto pad = [](const std::string& s, std::size_t w, bool left) {
    return left ? s + std::string(w > s.size() ? w - s.size() : 0, ' ')
                : std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  os << pad("cloud", name_w, true) << pad("points", 9, false);
  for (const auto& m : models) os << pad(m, col_w, false);
  for (std::size_t m = 1; m < models.size(); ++m) os << pad("gain " + models[m], col_w + 6, false);
  os << '\n';
  auto line = [&](const std::string& name, const std::string& points, const std::vector<double>& bpip) {
    os << pad(name, name_w, true) << pad(points, 9, false);
    for (double b : bpip) os << pad(fixed(b, 4), col_w, false);
    for (std::size_t m = 1; m < bpip.size(); ++m) {
      os << pad(fixed(gain_percent(bpip[0], bpip[m]), 2) + "%", col_w + 6, false);
    }
    os << '\n';
  };
  for (const auto& r : rows) line(r.cloud, std::to_string(r.points), r.bpip);
  if (!rows.empty()) line("average", "", average_bpip());
  return os.str();
}

BenchReport bench(const std::vector<NamedCloud>& corpus, const std::vector<BenchModel>& models) {
  if (models.empty()) throw DataError("bench: no models");
  BenchReport report;
  for (const auto& m : models) {
    if (m.models == nullptr) throw DataError("bench: model " + m.name + " is not loaded");
    report.models.push_back(m.name);
  }
  for (const auto& c : corpus) {
    BenchRow row;
    row.cloud = c.name;
    row.points = c.cloud.points.size();
    for (const auto& m : models) {
      const auto enc = encode_cloud_with_stats(c.cloud, *m.models);
      const QuantizedCloud back = decode_cloud(enc.compressed, *m.models);
      if (!(back == c.cloud)) {
        throw VerificationError("bench: round trip of " + c.name + " with model " + m.name + " is not lossless");
      }
      if (static_cast<double>(enc.stats.payload_bits) > enc.stats.quantized_bits + 32.0) {
        throw VerificationError("bench: payload of " + c.name + " exceeds the coder bound");
      }
      row.nodes = enc.stats.nodes;
      row.bpip.push_back(bpip(enc.compressed, row.points));
      row.quantized_bits.push_back(enc.stats.quantized_bits);
      row.payload_bits.push_back(enc.stats.payload_bits);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string CeParadoxReport::to_text() const {
  std::ostringstream os;
  os << std::setprecision(10);
  auto describe = [&](const char* name, const auto& dist, double loss, double expected, double err) {
    os << name << ":";
    for (const auto& [s, p] : dist) os << "  p(" << int(s) << ")=" << p << " [" << child_count(s) << " children]";
    os << "\n  cross-entropy vs label = " << loss << " bits\n  expected child count   = " << expected
       << "\n  |count error|          = " << err << '\n';
  };
  os << "label: symbol " << int(label) << " (" << child_count(label) << " occupied child)\n";
  describe("A", dist_a, loss_a, expected_count_a, count_error_a);
  describe("B", dist_b, loss_b, expected_count_b, count_error_b);
  os << "equal cross-entropy, different child-count error: "
     << ((loss_a == loss_b && count_error_a < count_error_b) ? "yes" : "no") << '\n';
  return os.str();
}

CeParadoxReport demo_ce_paradox() {
  CeParadoxReport r;
  r.label = 2;
  // A keeps its off-label mass on other single-child configurations; B puts
  // it on seven- and eight-child configurations.
  r.dist_a = {{1, 0.3}, {2, 0.4}, {4, 0.3}};
  r.dist_b = {{2, 0.4}, {253, 0.3}, {255, 0.3}};
  auto evaluate = [&](const auto& dist, double& loss, double& expected, double& err) {
    ProbDist255 p;
    p.p.fill(0.0);
    for (const auto& [s, v] : dist) p.p[s - 1u] = v;
    const OccupancySymbol labels[] = {r.label};
    loss = model_loss(std::span<const ProbDist255>(&p, 1), labels);
    expected = 0.0;
    for (const auto& [s, v] : dist) expected += v * child_count(s);
    err = std::abs(expected - child_count(r.label));
  };
  evaluate(r.dist_a, r.loss_a, r.expected_count_a, r.count_error_a);
  evaluate(r.dist_b, r.loss_b, r.expected_count_b, r.count_error_b);
  return r;
}

}  // namespace pcgc
