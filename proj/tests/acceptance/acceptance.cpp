// Acceptance run: one PASS/FAIL line per criterion, details on the lines
// that follow it. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pcgc/batch.hpp"
#include "pcgc/bytes.hpp"
#include "pcgc/codec.hpp"
#include "pcgc/error.hpp"
#include "pcgc/trainer.hpp"

using namespace pcgc;
using nn::Tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  int id;
  std::string name;
  bool pass = false;
  std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& s) {
  std::fprintf(stderr, "%s\n", s.c_str());
  std::fflush(stderr);
}

// ---- gradient checking ------------------------------------------------------

struct GradStats {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_rel = 0.0;

  void add(double analytic, double numeric) {
    ++checked;
    // relative error is reported where it is meaningful; near zero the
    // 1e-9 absolute floor of the check governs
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale >= 1e-3) worst_rel = std::max(worst_rel, std::abs(analytic - numeric) / scale);
    if (!oracle::grad_close(analytic, numeric, 1e-5, 1e-9)) ++failed;
  }
};

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal() * scale;
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_all(GradStats& st, Tensor& t, const Tensor& analytic, const std::function<double()>& loss,
               double h = 1e-6, std::size_t stride = 1) {
  for (std::size_t i = 0; i < t.size(); i += stride) st.add(analytic[i], oracle::central_diff(t.values()[i], loss, h));
}

std::vector<ContextFeatures> random_contexts(Rng& rng, const ContextConfig& cfg, std::size_t n) {
  std::vector<ContextFeatures> out;
  while (out.size() < n) {
    QuantizedCloud c;
    c.depth = 4;
    c.points = oracle::random_voxels(rng, 4, 25);
    const Octree t = build_octree(c);
    const auto stream = symbol_stream(t);
    out.push_back(node_context(t, stream[rng.below(stream.size())].ref, cfg));
  }
  return out;
}

Outcome criterion_gradients() {
  Outcome o{2, "gradient verification"};
  Rng rng(2024);
  std::map<std::string, GradStats> ops;
  constexpr int kTrials = 10;
  for (int trial = 0; trial < kTrials; ++trial) {
    {
      auto x = random_tensor({4, 5}, rng), w = random_tensor({5, 3}, rng), b = random_tensor({3}, rng);
      const auto r = random_tensor({4, 3}, rng);
      Tensor dx(x.shape()), dw(w.shape()), db(b.shape());
      nn::linear_backward(x, w, r, &dx, dw, db);
      auto loss = [&] { return dot(nn::linear(x, w, b), r); };
      check_all(ops["linear"], x, dx, loss);
      check_all(ops["linear"], w, dw, loss);
      check_all(ops["linear"], b, db, loss);
    }
    {
      auto x = random_tensor({3, 6}, rng);
      const auto r = random_tensor({3, 6}, rng);
      check_all(ops["relu"], x, nn::relu_backward(x, r), [&] { return dot(nn::relu(x), r); });
      for (int axis : {0, 1}) {
        const auto dx = nn::softmax_backward(nn::softmax(x, axis), r, axis);
        check_all(ops["softmax"], x, dx, [&] { return dot(nn::softmax(x, axis), r); });
      }
    }
    {
      auto q = random_tensor({3, 4}, rng), k = random_tensor({3, 4}, rng), v = random_tensor({3, 4}, rng);
      const std::vector<std::uint8_t> mask{0, static_cast<std::uint8_t>(trial % 2), 0};
      const auto r = random_tensor({3, 4}, rng);
      nn::AttentionCache cache;
      nn::attention(q, k, v, mask, &cache);
      const auto g = nn::attention_backward(q, k, v, cache, r);
      auto loss = [&] { return dot(nn::attention(q, k, v, mask), r); };
      check_all(ops["attention"], q, g.dq, loss);
      check_all(ops["attention"], k, g.dk, loss);
      check_all(ops["attention"], v, g.dv, loss);
    }
    {
      auto logits = random_tensor({3, 255}, rng, 2.0);
      std::vector<OccupancySymbol> labels;
      for (int i = 0; i < 3; ++i) labels.push_back(static_cast<OccupancySymbol>(1 + rng.below(255)));
      const auto res = nn::cross_entropy_255(logits, labels);
      check_all(ops["cross_entropy_255"], logits, res.grad, [&] { return nn::cross_entropy_255(logits, labels).value; },
                1e-4, 7);
    }
    {
      auto p = random_tensor({7}, rng);
      const auto t = random_tensor({7}, rng);
      check_all(ops["mse"], p, nn::mse(p, t).grad, [&] { return nn::mse(p, t).value; });
    }
    for (const ContextConfig cfg : {ContextConfig{3, 0}, ContextConfig{2, 2}}) {
      AcnpModel m(AcnpConfig{cfg, 4, 6, 1.0}, 100 + trial);
      for (auto& p : m.params().params())
        for (auto& v : p.value.values()) v += 0.1 * rng.normal();
      const auto ctxs = random_contexts(rng, cfg, 3);
      const std::vector<double> r{rng.normal(), rng.normal(), rng.normal()};
      m.params().zero_grad();
      AcnpModel::Cache cache;
      m.forward(ctxs, &cache);
      m.backward(cache, r);
      auto loss = [&] {
        const auto n = m.forward(ctxs);
        return n[0] * r[0] + n[1] * r[1] + n[2] * r[2];
      };
      auto& st = ops[cfg.window ? "acnp (window)" : "acnp (ancestors)"];
      for (auto& p : m.params().params()) check_all(st, p.value, p.grad, loss, 1e-6, p.value.size() > 200 ? 37 : 1);
    }
    for (const ContextConfig cfg : {ContextConfig{2, 0}, ContextConfig{2, 2}}) {
      for (bool enhanced : {false, true}) {
        ContextModel m(ContextModelConfig{cfg, enhanced, 6, 5, 7, 4}, 50 + trial);
        for (auto& p : m.params().params())
          for (auto& v : p.value.values()) v += 0.1 * rng.normal();
        const auto ctxs = random_contexts(rng, cfg, 2);
        Tensor numbers = Tensor::matrix(2, 8);
        for (std::size_t i = 0; i < 2; ++i) {
          const auto nv = number_vector(gaussian_map(rng.uniform(-1, 9)));
          std::copy(nv.begin(), nv.end(), numbers.row(i).begin());
        }
        const Tensor* vp = enhanced ? &numbers : nullptr;
        const auto r = random_tensor({2, 255}, rng);
        m.params().zero_grad();
        ContextModel::Cache cache;
        m.forward_logits(ctxs, vp, &cache);
        m.backward(cache, r);
        auto loss = [&] { return dot(m.forward_logits(ctxs, vp), r); };
        auto& st = ops[std::string("context model (") + (cfg.window ? "window" : "ancestors") +
                       (enhanced ? ", enhanced)" : ")")];
        for (auto& p : m.params().params()) check_all(st, p.value, p.grad, loss, 1e-6, p.value.size() > 300 ? 53 : 1);
      }
    }
  }
  o.pass = true;
  for (const auto& [name, st] : ops) {
    o.pass = o.pass && st.failed == 0 && st.checked > 0;
    o.details.push_back(fmt("%-36s %d instances, %5zu entries, %zu over tolerance, worst rel (|g| >= 1e-3) %.2e",
                            name.c_str(),
                            kTrials, st.checked, st.failed, st.worst_rel));
  }
  return o;
}

// ---- number vector --------------------------------------------------------

Outcome criterion_number_vector() {
  Outcome o{3, "gaussian map and number vector exactness"};
  const double g33 = gaussian_map(3.0)[2];
  const bool peak = std::abs(g33 - 0.398942) <= 1e-6;
  o.details.push_back(fmt("gaussian_map(3)(3) = %.9f", g33));

  bool symmetric = true;
  for (int mu = 1; mu <= 8; ++mu) {
    const auto g = gaussian_map(mu);
    for (int t = 1; mu - t >= 1 && mu + t <= 8; ++t) symmetric = symmetric && g[mu - t - 1] == g[mu + t - 1];
  }
  o.details.push_back(std::string("symmetry O(mu-t) == O(mu+t): ") + (symmetric ? "exact" : "broken"));

  double worst_norm = 0.0, worst_oracle = 0.0;
  int argmax_misses = 0, sweeps = 0;
  for (int i = 0; i <= 120; ++i) {
    const double n_hat = -2.0 + 0.1 * i;
    const auto v = number_vector(gaussian_map(n_hat));
    double sum = 0.0;
    for (double x : v) sum += x;
    worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
    const int mu = gaussian_center(n_hat);
    const auto best = std::max_element(v.begin(), v.end()) - v.begin();
    argmax_misses += best + 1 != mu;
    const auto ld = oracle::number_vector_ld(mu);
    for (int k = 0; k < 8; ++k) worst_oracle = std::max(worst_oracle, std::abs(v[k] - static_cast<double>(ld[k])));
    ++sweeps;
  }
  o.details.push_back(fmt("V normalization worst |sum-1| = %.2e over %d values of n_hat", worst_norm, sweeps));
  o.details.push_back(fmt("argmax(V) != mu for %d of %d values; worst deviation from long-double oracle %.2e",
                          argmax_misses, sweeps, worst_oracle));
  o.pass = peak && symmetric && worst_norm <= 1e-9 && argmax_misses == 0 && worst_oracle <= 1e-12;
  return o;
}

// ---- cross-entropy demonstration -------------------------------------------

Outcome criterion_ce_paradox() {
  Outcome o{4, "cross-entropy pathology demonstration"};
  const auto r = demo_ce_paradox();
  const double exact = -std::log2(0.4);
  o.details.push_back(fmt("loss(A) = %.12f bits, loss(B) = %.12f bits, -log2(0.4) = %.12f", r.loss_a, r.loss_b, exact));
  o.details.push_back(fmt("expected count: A %.6f, B %.6f; true count 1; error A %.6f, B %.6f", r.expected_count_a,
                          r.expected_count_b, r.count_error_a, r.count_error_b));
  o.pass = std::abs(r.loss_a - r.loss_b) <= 1e-9 && std::abs(r.loss_a - exact) <= 1e-9 &&
           std::abs(r.loss_a - 1.3219) < 5e-5 && std::abs(r.count_error_a) <= 1e-9 &&
           std::abs(r.count_error_b - 3.9) <= 1e-9;
  return o;
}

// ---- coder ------------------------------------------------------------------

ProbDist255 random_dist(Rng& rng) {
  ProbDist255 d;
  double sum = 0.0;
  const double sharp = rng.uniform(0.5, 8.0);
  for (auto& p : d.p) {
    p = std::exp(sharp * rng.normal());
    sum += p;
  }
  for (auto& p : d.p) p /= sum;
  return d;
}

Outcome criterion_coder(const std::vector<const BenchReport*>& reports) {
  Outcome o{5, "coder soundness"};
  Rng rng(5);
  std::vector<OccupancySymbol> syms;
  std::vector<FreqTable> tables;
  for (int i = 0; i < 10000; ++i) {
    tables.push_back(quantize_dist(random_dist(rng)));
    const auto& t = tables.back();
    const auto u = static_cast<std::uint32_t>(rng.below(kFreqTotal));
    syms.push_back(static_cast<OccupancySymbol>(std::upper_bound(t.cumulative.begin(), t.cumulative.end(), u) -
                                                t.cumulative.begin()));
  }
  const auto bits = encode_symbols(syms, tables);
  const double ideal = ideal_bits(syms, tables);
  const bool stream_ok = decode_symbols(bits, [&](std::size_t i) { return tables[i]; }, syms.size()) == syms;
  std::size_t single_ok = 0;
  for (std::size_t i = 0; i < syms.size(); ++i) {
    const std::vector<OccupancySymbol> s{syms[i]};
    const std::vector<FreqTable> t{tables[i]};
    single_ok += decode_symbols(encode_symbols(s, t), [&](std::size_t) { return t[0]; }, 1) == s;
  }
  o.details.push_back(fmt("10000 random symbol/table pairs: one stream %s (%llu bits, ideal %.1f); "
                          "%zu of 10000 single-symbol streams round trip",
                          stream_ok ? "round trips" : "MISMATCH",
                          static_cast<unsigned long long>(bits.bit_length), ideal, single_ok));
  bool bound_ok = static_cast<double>(bits.bit_length) <= ideal + 32.0;
  std::size_t runs = 0;
  double worst_slack = -1e300;
  for (const auto* rep : reports) {
    for (const auto& row : rep->rows) {
      for (std::size_t m = 0; m < rep->models.size(); ++m) {
        ++runs;
        const double slack = static_cast<double>(row.payload_bits[m]) - row.quantized_bits[m];
        worst_slack = std::max(worst_slack, slack);
        bound_ok = bound_ok && slack <= 32.0;
      }
    }
  }
  o.details.push_back(fmt("bench encodes checked: %zu; worst payload - sum(-log2 q) = %.2f bits (bound 32)", runs,
                          worst_slack));
  o.pass = stream_ok && single_ok == syms.size() && bound_ok && runs > 0;
  return o;
}

// ---- training helpers ---------------------------------------------------------

struct Corpus {
  DatasetSplit split;
  std::vector<NodeSample> train;
  std::vector<NodeSample> held;
};

Corpus make_corpus(const std::vector<CloudKind>& kinds, std::size_t clouds, std::size_t points, int depth,
                   std::uint64_t seed, const ContextConfig& cfg) {
  Corpus c;
  c.split = split_by_digest(generate_corpus(kinds, clouds, points, depth, seed), 0.2);
  c.train = collect_samples(c.split.train, cfg);
  c.held = collect_samples(c.split.held_out, cfg);
  return c;
}

EpochCallback log_epochs(const std::string& tag, Clock::time_point t0) {
  return [tag, t0](int e, double loss) { progress(fmt("  %s epoch %d: %.5f (%.0fs)", tag.c_str(), e, loss, seconds_since(t0))); };
}

// ---- criterion 6 -------------------------------------------------------------

Outcome criterion_beats_uniform() {
  Outcome o{6, "trained baseline beats the uniform anchor on held-out planes"};
  const auto t0 = Clock::now();
  const ContextConfig cfg{};
  const auto corpus = make_corpus({CloudKind::Plane}, 100, 20000, 6, 61, cfg);
  TrainConfig tc = ancestor_model_defaults();
  tc.epochs = 5;
  tc.lr = 1e-3;
  tc.decay = 0.93;
  tc.batch = 256;
  tc.context = cfg;
  const auto r = train_context_model(corpus.train, tc, ContextModelConfig{cfg, false}, {}, log_epochs("plane", t0));
  const double held = evaluate_context_model(r.model, corpus.held, {});
  const double anchor = evaluate_context_model(
      [&] {
        ContextModel u(ContextModelConfig{cfg, false}, 1);
        u.zero_output_layer();
        return u;
      }(),
      corpus.held, {});
  const double minutes = seconds_since(t0) / 60.0;
  o.details.push_back(fmt("plane corpus: %zu train / %zu held-out clouds, %zu / %zu nodes", corpus.split.train.size(),
                          corpus.split.held_out.size(), corpus.train.size(), corpus.held.size()));
  o.details.push_back(fmt("held-out %.4f bits/node vs uniform %.4f (ceiling 5.0); training %d epochs, %.1f min",
                          held, anchor, tc.epochs, minutes));
  o.pass = held <= 5.0 && minutes <= 15.0;
  return o;
}

// ---- criteria 7 and 8 ---------------------------------------------------------

struct AcnpStudy {
  Outcome c7{7, "ACNP-enhanced model against the baseline"};
  Outcome c8{8, "ACNP regression quality"};
  BenchReport report;
  std::optional<CodecModels> baseline;
  std::optional<CodecModels> enhanced;
};

AcnpStudy acnp_study() {
  AcnpStudy s;
  const auto t0 = Clock::now();
  const ContextConfig cfg{};
  const auto corpus = make_corpus({CloudKind::Plane, CloudKind::Sphere}, 150, 3000, 6, 7, cfg);
  progress(fmt("ACNP corpus: %zu train nodes, %zu held-out nodes", corpus.train.size(), corpus.held.size()));

  TrainConfig ac = acnp_defaults();
  ac.context = cfg;
  const auto acnp = train_acnp(corpus.train, ac, AcnpConfig{cfg}, log_epochs("acnp", t0));
  const auto eval = evaluate_acnp(acnp.model, corpus.held);
  const auto& mse = acnp.log.epoch_loss;
  std::size_t rises = 0;
  for (std::size_t e = 1; e < mse.size(); ++e) rises += mse[e] > mse[e - 1];
  std::string curve;
  for (double v : mse) curve += fmt(" %.4f", v);
  s.c8.details.push_back(fmt("%d epochs; held-out mean |n_hat - n| = %.4f, MSE %.4f", ac.epochs, eval.mean_abs_error,
                             eval.mse));
  s.c8.details.push_back("training MSE per epoch:" + curve);
  s.c8.details.push_back(fmt("epochs where MSE rose: %zu", rises));
  s.c8.pass = eval.mean_abs_error < 1.0 && rises == 0;

  TrainConfig mc = ancestor_model_defaults();
  mc.epochs = 4;
  mc.lr = 1e-3;
  mc.decay = 0.93;
  mc.batch = 256;
  mc.context = cfg;
  ContextModelConfig base_cfg{cfg, false};
  ContextModelConfig enh_cfg{cfg, true};
  const auto base = train_context_model(corpus.train, mc, base_cfg, {}, log_epochs("baseline", t0));
  const auto oracle = train_context_model(corpus.train, mc, enh_cfg, {NumberSource::Oracle}, log_epochs("oracle", t0));
  const auto enh = train_context_model(corpus.train, mc, enh_cfg, {NumberSource::Acnp, &acnp.model},
                                       log_epochs("acnp-enhanced", t0));
  const double ce_base = evaluate_context_model(base.model, corpus.held, {});
  const double ce_oracle = evaluate_context_model(oracle.model, corpus.held, {NumberSource::Oracle});
  const double ce_enh = evaluate_context_model(enh.model, corpus.held, {NumberSource::Acnp, &acnp.model});

  s.baseline = CodecModels::from_models(base.model);
  s.enhanced = CodecModels::from_models(enh.model, acnp.model);
  s.report = bench(corpus.split.held_out, {{"baseline", &*s.baseline}, {"acnp", &*s.enhanced}});
  const auto avg = s.report.average_bpip();
  const double gain = s.report.average_gain()[1];

  s.c7.details.push_back(fmt("corpus: plane+sphere, %zu train / %zu held-out clouds; matched seeds and widths",
                             corpus.split.train.size(), corpus.split.held_out.size()));
  s.c7.details.push_back(fmt("(a) held-out cross-entropy: baseline %.4f, oracle V %.4f bits/node", ce_base, ce_oracle));
  s.c7.details.push_back(fmt("    trained-ACNP V %.4f bits/node", ce_enh));
  s.c7.details.push_back(fmt("(b) held-out BPIP: baseline %.4f, ACNP %.4f, gain %+.2f%% (target <= -0.50%%: %s)", avg[0],
                             avg[1], gain, gain <= -0.5 ? "met" : "missed"));
  s.c7.details.push_back("bench:");
  std::string text = s.report.to_text();
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    s.c7.details.push_back("  " + text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  s.c7.pass = ce_oracle < ce_base && avg[1] <= avg[0] && gain <= -0.5;
  progress(fmt("ACNP study done (%.0fs)", seconds_since(t0)));
  return s;
}

// ---- criterion 1 -------------------------------------------------------------

Outcome criterion_round_trip(const CodecModels& baseline, const CodecModels& enhanced, BenchReport& log) {
  Outcome o{1, "lossless round trip"};
  const auto t0 = Clock::now();
  Rng rng(1);
  const std::vector<CloudKind> kinds{CloudKind::Plane, CloudKind::Sphere, CloudKind::GaussianClusters,
                                     CloudKind::RandomWalkSurface};
  std::size_t ok = 0, total = 0, points = 0;
  log.models = {"baseline", "acnp"};
  for (int i = 0; i < 200; ++i) {
    const int depth = 2 + i % 5;
    const std::size_t budget = 1 + rng.below(10000);
    QuantizedCloud cloud;
    if (i % 5 == 4) {
      cloud = oracle::random_cloud(rng, depth, budget);
    } else {
      cloud = generate_cloud({kinds[rng.below(kinds.size())], budget, depth, 1000 + static_cast<std::uint64_t>(i)});
    }
    BenchRow row;
    row.points = cloud.points.size();
    for (const auto* m : {&baseline, &enhanced}) {
      ++total;
      const auto enc = encode_cloud_with_stats(cloud, *m);
      const auto bytes = serialize_container(enc.compressed);
      ok += decode_cloud(parse_container(bytes), *m) == cloud;
      row.payload_bits.push_back(enc.stats.payload_bits);
      row.quantized_bits.push_back(enc.stats.quantized_bits);
    }
    points += cloud.points.size();
    log.rows.push_back(row);
  }
  const double secs = seconds_since(t0);
  o.details.push_back(fmt("%zu of %zu encode/decode pairs exact (200 clouds, depths 2-6, %zu points, both kinds)", ok,
                          total, points));
  o.details.push_back(fmt("runtime %.1f s (target < 300 s)", secs));
  o.pass = ok == total && secs < 300.0;
  return o;
}

// ---- criterion 9 -------------------------------------------------------------

Outcome criterion_determinism() {
  Outcome o{9, "determinism"};
  const ContextConfig cfg{};
  const auto corpus = make_corpus({CloudKind::Plane, CloudKind::Sphere}, 6, 2000, 5, 99, cfg);
  auto run = [&] {
    TrainConfig ac = acnp_defaults();
    ac.epochs = 2;
    ac.context = cfg;
    const auto a = train_acnp(corpus.train, ac, AcnpConfig{cfg});
    TrainConfig mc = ancestor_model_defaults();
    mc.epochs = 2;
    mc.batch = 256;
    mc.lr = 1e-3;
    mc.context = cfg;
    const auto m = train_context_model(corpus.train, mc, ContextModelConfig{cfg, true}, {NumberSource::Acnp, &a.model});
    const std::string ca = nn::serialize_checkpoint(a.model.to_checkpoint());
    const std::string cm = nn::serialize_checkpoint(m.model.to_checkpoint());
    const auto models = CodecModels::from_models(m.model, a.model);
    std::vector<std::vector<std::uint8_t>> payloads;
    for (const auto* part : {&corpus.split.train, &corpus.split.held_out})
      for (const auto& c : *part) payloads.push_back(serialize_container(encode_cloud(c.cloud, models)));
    return std::make_tuple(ca, cm, payloads);
  };
  const auto [a1, m1, p1] = run();
  const auto [a2, m2, p2] = run();
  o.details.push_back(fmt("ACNP checkpoint %zu bytes, sha256 %s, %s", a1.size(), to_hex(sha256(as_bytes(a1))).substr(0, 16).c_str(),
                          a1 == a2 ? "identical" : "DIFFERENT"));
  o.details.push_back(fmt("context checkpoint %zu bytes, sha256 %s, %s", m1.size(), to_hex(sha256(as_bytes(m1))).substr(0, 16).c_str(),
                          m1 == m2 ? "identical" : "DIFFERENT"));
  o.details.push_back(fmt("%zu compressed containers %s", p1.size(), p1 == p2 ? "identical" : "DIFFERENT"));
  o.pass = a1 == a2 && m1 == m2 && p1 == p2 && !p1.empty();
  return o;
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  std::vector<Outcome> outcomes;
  auto guarded = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    try {
      outcomes.push_back(f());
    } catch (const std::exception& e) {
      outcomes.push_back(Outcome{id, name, false, {std::string("exception: ") + e.what()}});
    }
    progress(fmt("criterion %d finished (%.0fs)", id, seconds_since(t0)));
  };

  AcnpStudy study;
  bool study_ok = false;
  try {
    study = acnp_study();
    study_ok = true;
  } catch (const std::exception& e) {
    study.c7.details.push_back(std::string("exception: ") + e.what());
    study.c8.details.push_back(std::string("exception: ") + e.what());
  }

  BenchReport round_trip_log;
  guarded(1, "lossless round trip", [&] {
    if (!study_ok) throw DataError("no trained models");
    return criterion_round_trip(*study.baseline, *study.enhanced, round_trip_log);
  });
  guarded(2, "gradient verification", criterion_gradients);
  guarded(3, "gaussian map and number vector exactness", criterion_number_vector);
  guarded(4, "cross-entropy pathology demonstration", criterion_ce_paradox);
  guarded(5, "coder soundness", [&] { return criterion_coder({&study.report, &round_trip_log}); });
  guarded(6, "trained baseline beats the uniform anchor on held-out planes", criterion_beats_uniform);
  outcomes.push_back(study.c7);
  outcomes.push_back(study.c8);
  guarded(9, "determinism", criterion_determinism);

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int failed = 0;
  for (const auto& o : outcomes) {
    std::printf("%s [%d] %s\n", o.pass ? "PASS" : "FAIL", o.id, o.name.c_str());
    for (const auto& d : o.details) std::printf("       %s\n", d.c_str());
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed (%.0f s)\n", static_cast<int>(outcomes.size()) - failed, outcomes.size(),
              seconds_since(t0));
  return failed;
}
