// pcgc: octree geometry codec with a learned context model.
//
// Every flag can also be given in a config file passed with --config. The
// file is INI style: top-level keys apply to the main command, and a
// [subcommand] section holds that subcommand's keys, spelled like the long
// flag without dashes:
//
//   [train-model]
//   epochs = 10
//   lr = 0.001
//   acnp = acnp.ckpt
//
// Command-line flags take precedence over the file.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcgc/bytes.hpp"
#include "pcgc/error.hpp"
#include "pcgc/trainer.hpp"

namespace fs = std::filesystem;
using namespace pcgc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct CorpusOptions {
  std::vector<std::string> inputs;
  std::string kinds = "plane,sphere";
  std::size_t clouds = 16;
  std::size_t points = 3000;
  int depth = 6;
  std::uint64_t seed = 1;
  double held_out = 0.2;
};

void add_corpus_options(CLI::App* cmd, CorpusOptions& o, bool allow_split) {
  cmd->add_option("inputs", o.inputs, "Quantized clouds; a synthetic corpus is generated when none are given");
  cmd->add_option("--kinds", o.kinds, "Comma-separated synthetic cloud kinds")->capture_default_str();
  cmd->add_option("--clouds", o.clouds, "Synthetic corpus size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--points", o.points, "Synthetic point budget per cloud")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--depth", o.depth, "Synthetic octree depth")
      ->capture_default_str()
      ->check(CLI::Range(kMinDepth, kMaxDepth));
  cmd->add_option("--data-seed", o.seed, "Synthetic corpus seed")->capture_default_str();
  if (allow_split) {
    cmd->add_option("--held-out", o.held_out, "Fraction of clouds held out for evaluation (0 disables)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.9));
  }
}

std::vector<CloudKind> parse_kinds(const std::string& list) {
  std::vector<CloudKind> kinds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kinds.push_back(parse_cloud_kind(item));
  }
  if (kinds.empty()) throw DataError("no cloud kinds given");
  return kinds;
}

std::vector<NamedCloud> load_corpus(const CorpusOptions& o) {
  if (o.inputs.empty()) return generate_corpus(parse_kinds(o.kinds), o.clouds, o.points, o.depth, o.seed);
  std::vector<NamedCloud> out;
  for (const auto& path : o.inputs) out.push_back({fs::path(path).stem().string(), read_quantized(path)});
  return out;
}

DatasetSplit split_corpus(std::vector<NamedCloud> clouds, double held_out) {
  if (held_out <= 0.0 || clouds.size() < 2) return DatasetSplit{std::move(clouds), {}};
  return split_by_digest(std::move(clouds), held_out);
}

struct TrainOptions {
  std::string out;
  int epochs = 0;
  double lr = 0.0;
  double decay = 0.0;
  std::size_t batch = 0;
  std::uint64_t seed = 1;
  int ancestors = 4;
  int window = 0;
};

void add_train_options(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("-o,--out", o.out, "Checkpoint path")->required();
  cmd->add_option("--epochs", o.epochs, "Epochs (default depends on the model)");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--decay", o.decay, "Per-epoch learning-rate factor");
  cmd->add_option("--batch", o.batch, "Nodes per batch");
  cmd->add_option("--seed", o.seed, "Initialization and shuffling seed")->capture_default_str();
  cmd->add_option("-K,--ancestors", o.ancestors, "Ancestor levels in the context")
      ->capture_default_str()
      ->check(CLI::Range(1, 16));
  cmd->add_option("-W,--window", o.window, "Preceding siblings in the context")
      ->capture_default_str()
      ->check(CLI::Range(0, 1024));
}

TrainConfig resolve_train_config(TrainConfig defaults, const TrainOptions& o) {
  if (o.epochs > 0) defaults.epochs = o.epochs;
  if (o.lr > 0.0) defaults.lr = o.lr;
  if (o.decay > 0.0) defaults.decay = o.decay;
  if (o.batch > 0) defaults.batch = o.batch;
  defaults.seed = o.seed;
  defaults.context = ContextConfig{o.ancestors, o.window};
  return defaults;
}

void print_epoch(int epoch, double loss, const char* unit) {
  std::printf("epoch %3d  %s %.6f\n", epoch + 1, unit, loss);
  std::fflush(stdout);
}

std::string slurp(const std::string& path) { return read_file(path); }

CodecModels load_models(const std::string& model_path, const std::string& acnp_path) {
  const std::string model = slurp(model_path);
  if (acnp_path.empty()) return CodecModels::from_checkpoints(as_bytes(model));
  const std::string acnp = slurp(acnp_path);
  return CodecModels::from_checkpoints(as_bytes(model), as_bytes(acnp));
}

// NAME=MODEL[:ACNP]
struct BenchSpec {
  std::string name;
  std::string model;
  std::string acnp;
};

BenchSpec parse_bench_spec(const std::string& s) {
  BenchSpec b;
  const auto eq = s.find('=');
  std::string rest = s;
  if (eq != std::string::npos) {
    b.name = s.substr(0, eq);
    rest = s.substr(eq + 1);
  }
  const auto colon = rest.find(':');
  b.model = rest.substr(0, colon);
  if (colon != std::string::npos) b.acnp = rest.substr(colon + 1);
  if (b.model.empty()) throw CLI::ValidationError("--model", "expected NAME=MODEL[:ACNP], got '" + s + "'");
  if (b.name.empty()) b.name = fs::path(b.model).stem().string();
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lossless octree geometry codec with a learned context model and child-count prediction"};
  app.set_config("--config", "", "INI file of default option values");
  app.require_subcommand(1);

  // quantize
  std::string q_in, q_out;
  int q_depth = 10;
  auto* quantize_cmd = app.add_subcommand("quantize", "Voxelize an ASCII PLY cloud");
  quantize_cmd->add_option("input", q_in, "Input PLY")->required();
  quantize_cmd->add_option("output", q_out, "Output quantized PLY")->required();
  quantize_cmd->add_option("--depth", q_depth, "Octree depth")->required()->check(CLI::Range(kMinDepth, kMaxDepth));

  // gen
  std::string g_kind = "plane", g_out;
  std::size_t g_points = 5000;
  int g_depth = 6;
  std::uint64_t g_seed = 1;
  bool g_raw = false;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic quantized cloud");
  gen_cmd->add_option("--kind", g_kind, "plane | sphere | gaussian-clusters | random-walk-surface")
      ->capture_default_str();
  gen_cmd->add_option("--points", g_points, "Point budget before voxel deduplication")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--depth", g_depth, "Octree depth")->capture_default_str()->check(CLI::Range(kMinDepth, kMaxDepth));
  gen_cmd->add_option("--seed", g_seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("-o,--out", g_out, "Output path (stdout when omitted)");
  gen_cmd->add_flag("--dequantized", g_raw, "Write real-valued coordinates instead of voxels");

  // train-acnp
  CorpusOptions ta_corpus;
  TrainOptions ta;
  AcnpConfig ta_model;
  auto* train_acnp_cmd = app.add_subcommand("train-acnp", "Train the child-count predictor");
  add_corpus_options(train_acnp_cmd, ta_corpus, true);
  add_train_options(train_acnp_cmd, ta);
  train_acnp_cmd->add_option("--attention-dim", ta_model.attention_dim, "Attention width")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_acnp_cmd->add_option("--hidden", ta_model.hidden, "MLP hidden width")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_acnp_cmd->add_option("--sigma", ta_model.sigma, "Gaussian width of the count vector")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // train-model
  CorpusOptions tm_corpus;
  TrainOptions tm;
  ContextModelConfig tm_model;
  std::string tm_acnp;
  auto* train_model_cmd = app.add_subcommand("train-model", "Train a context model, enhanced when --acnp is given");
  add_corpus_options(train_model_cmd, tm_corpus, true);
  add_train_options(train_model_cmd, tm);
  train_model_cmd->add_option("--acnp", tm_acnp, "Frozen ACNP checkpoint")->check(CLI::ExistingFile);
  train_model_cmd->add_option("--extract1", tm_model.extract1, "First extraction layer width")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_model_cmd->add_option("--extract2", tm_model.extract2, "Second extraction layer width")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_model_cmd->add_option("--aggregate", tm_model.aggregate, "Aggregation layer width")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_model_cmd->add_option("--attention-dim", tm_model.attention_dim, "Sibling attention width (W > 0)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // encode
  std::string e_in, e_out, e_model, e_acnp;
  auto* encode_cmd = app.add_subcommand("encode", "Compress a quantized cloud");
  encode_cmd->add_option("input", e_in, "Quantized PLY")->required();
  encode_cmd->add_option("output", e_out, "Compressed container")->required();
  encode_cmd->add_option("--model", e_model, "Context-model checkpoint")->required()->check(CLI::ExistingFile);
  encode_cmd->add_option("--acnp", e_acnp, "ACNP checkpoint (enhanced models)")->check(CLI::ExistingFile);

  // decode
  std::string d_in, d_out, d_model, d_acnp;
  bool d_raw = false;
  auto* decode_cmd = app.add_subcommand("decode", "Decompress a container");
  decode_cmd->add_option("input", d_in, "Compressed container")->required();
  decode_cmd->add_option("output", d_out, "Quantized PLY")->required();
  decode_cmd->add_option("--model", d_model, "Context-model checkpoint")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--acnp", d_acnp, "ACNP checkpoint (enhanced models)")->check(CLI::ExistingFile);
  decode_cmd->add_flag("--dequantized", d_raw, "Write real-valued coordinates instead of voxels");

  // bench
  CorpusOptions b_corpus;
  std::vector<std::string> b_models;
  std::string b_csv;
  bool b_uniform = false;
  auto* bench_cmd = app.add_subcommand("bench", "Round-trip a corpus through each model and report BPIP");
  add_corpus_options(bench_cmd, b_corpus, false);
  bench_cmd->add_option("-m,--model", b_models, "NAME=MODEL[:ACNP]; the first model is the gain reference");
  bench_cmd->add_flag("--uniform", b_uniform, "Prepend a uniform-distribution reference model");
  bench_cmd->add_option("--csv", b_csv, "Also write the report as CSV");

  auto* demo_cmd = app.add_subcommand("demo-ce-paradox",
                                      "Two predictions with equal cross-entropy but different child-count error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*quantize_cmd) {
      const QuantizedCloud q = quantize(read_ply(q_in), q_depth);
      write_quantized(q_out, q);
      std::printf("%zu voxels at depth %d\n", q.points.size(), q.depth);
    } else if (*gen_cmd) {
      const QuantizedCloud q = generate_cloud({parse_cloud_kind(g_kind), g_points, g_depth, g_seed});
      const std::string text = g_raw ? format_ply(dequantize(q)) : format_quantized(q);
      if (g_out.empty()) {
        std::cout << text;
      } else {
        write_file(g_out, text);
        std::printf("%zu voxels at depth %d\n", q.points.size(), q.depth);
      }
    } else if (*train_acnp_cmd) {
      const TrainConfig cfg = resolve_train_config(acnp_defaults(), ta);
      ta_model.context = cfg.context;
      const auto split = split_corpus(load_corpus(ta_corpus), ta_corpus.held_out);
      const auto train = collect_samples(split.train, cfg.context);
      std::printf("training ACNP on %zu nodes from %zu clouds\n", train.size(), split.train.size());
      auto result = train_acnp(train, cfg, ta_model, [](int e, double l) { print_epoch(e, l, "mse"); });
      write_file(ta.out, nn::serialize_checkpoint(result.model.to_checkpoint()));
      if (!split.held_out.empty()) {
        const auto eval = evaluate_acnp(result.model, collect_samples(split.held_out, cfg.context));
        std::printf("held-out  mse %.6f  mean |n_hat - n| %.6f\n", eval.mse, eval.mean_abs_error);
      }
    } else if (*train_model_cmd) {
      const bool window = tm.window > 0;
      const TrainConfig cfg = resolve_train_config(window ? window_model_defaults() : ancestor_model_defaults(), tm);
      tm_model.context = cfg.context;
      std::optional<AcnpModel> acnp;
      if (!tm_acnp.empty()) {
        acnp = AcnpModel::from_checkpoint(nn::parse_checkpoint(as_bytes(slurp(tm_acnp))));
        if (!(acnp->config().context == cfg.context)) {
          throw DataError("ACNP checkpoint was trained with a different context layout (use matching -K/-W)");
        }
      }
      tm_model.enhanced = acnp.has_value();
      const NumberFeed feed{acnp ? NumberSource::Acnp : NumberSource::None, acnp ? &*acnp : nullptr};
      const auto split = split_corpus(load_corpus(tm_corpus), tm_corpus.held_out);
      const auto train = collect_samples(split.train, cfg.context);
      std::printf("training %s context model on %zu nodes from %zu clouds\n", acnp ? "enhanced" : "baseline",
                  train.size(), split.train.size());
      auto result = train_context_model(train, cfg, tm_model, feed,
                                        [](int e, double l) { print_epoch(e, l, "bits/node"); });
      write_file(tm.out, nn::serialize_checkpoint(result.model.to_checkpoint()));
      if (!split.held_out.empty()) {
        const double bits = evaluate_context_model(result.model, collect_samples(split.held_out, cfg.context), feed);
        std::printf("held-out  %.6f bits/node\n", bits);
      }
    } else if (*encode_cmd) {
      const CodecModels models = load_models(e_model, e_acnp);
      const QuantizedCloud cloud = read_quantized(e_in);
      const auto enc = encode_cloud_with_stats(cloud, models);
      const auto bytes = serialize_container(enc.compressed);
      write_file(e_out, to_string(bytes));
      const auto& s = enc.stats;
      std::printf("points %zu  nodes %zu  payload %llu bits  header %llu bits\n", s.points, s.nodes,
                  static_cast<unsigned long long>(s.payload_bits), static_cast<unsigned long long>(s.header_bits));
      std::printf("bpip %.6f (payload)  %.6f (with header)\n", bpip(enc.compressed, s.points),
                  static_cast<double>(s.payload_bits + s.header_bits) / static_cast<double>(s.points));
    } else if (*decode_cmd) {
      const CodecModels models = load_models(d_model, d_acnp);
      const std::string bytes = slurp(d_in);
      const QuantizedCloud cloud = decode_cloud(parse_container(as_bytes(bytes)), models);
      write_file(d_out, d_raw ? format_ply(dequantize(cloud)) : format_quantized(cloud));
      std::printf("%zu voxels at depth %d\n", cloud.points.size(), cloud.depth);
    } else if (*bench_cmd) {
      std::vector<CodecModels> loaded;
      std::vector<std::string> names;
      std::vector<BenchSpec> specs;
      for (const auto& s : b_models) specs.push_back(parse_bench_spec(s));
      if (specs.empty() && !b_uniform) throw CLI::ValidationError("--model", "bench needs at least one model");
      loaded.reserve(specs.size() + 1);
      if (b_uniform) {
        const ContextConfig ctx = specs.empty() ? ContextConfig{} : load_models(specs[0].model, specs[0].acnp).context();
        ContextModel uniform(ContextModelConfig{ctx}, 0);
        uniform.zero_output_layer();
        loaded.push_back(CodecModels::from_models(uniform));
        names.push_back("uniform");
      }
      for (const auto& s : specs) {
        loaded.push_back(load_models(s.model, s.acnp));
        names.push_back(s.name);
      }
      std::vector<BenchModel> models;
      for (std::size_t i = 0; i < loaded.size(); ++i) models.push_back({names[i], &loaded[i]});
      const BenchReport report = bench(load_corpus(b_corpus), models);
      std::cout << report.to_text();
      if (!b_csv.empty()) write_file(b_csv, report.to_csv());
    } else if (*demo_cmd) {
      std::cout << demo_ce_paradox().to_text();
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const VerificationError& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return kExitVerify;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
