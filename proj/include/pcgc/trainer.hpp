#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcgc/acnp.hpp"
#include "pcgc/codec.hpp"
#include "pcgc/context_model.hpp"
#include "pcgc/pointcloud_io.hpp"

namespace pcgc {

// ---- synthetic corpora ----------------------------------------------------

enum class CloudKind { Plane, Sphere, GaussianClusters, RandomWalkSurface };

const char* to_string(CloudKind kind);
CloudKind parse_cloud_kind(const std::string& name);

struct SyntheticSpec {
  CloudKind kind = CloudKind::Plane;
  std::size_t points = 5000;  // samples drawn before voxel deduplication
  int depth = 6;
  std::uint64_t seed = 1;
};

QuantizedCloud generate_cloud(const SyntheticSpec& spec);

struct NamedCloud {
  std::string name;
  QuantizedCloud cloud;
};

// `count` clouds cycling through `kinds`, seeds derived from `seed`.
std::vector<NamedCloud> generate_corpus(const std::vector<CloudKind>& kinds, std::size_t count, std::size_t points,
                                        int depth, std::uint64_t seed);

struct DatasetSplit {
  std::vector<NamedCloud> train;
  std::vector<NamedCloud> held_out;
};

// Orders clouds by content digest and holds out the first
// ceil(fraction * n). Throws if two clouds share a digest.
DatasetSplit split_by_digest(std::vector<NamedCloud> clouds, double held_out_fraction);

// Zeroth-order entropy of the occupancy stream, in bits per input point.
double empirical_stream_bits_per_point(const QuantizedCloud& cloud);

// ---- training -------------------------------------------------------------

struct NodeSample {
  ContextFeatures ctx;
  OccupancySymbol symbol = 0;
};

std::vector<NodeSample> collect_samples(const std::vector<NamedCloud>& clouds, const ContextConfig& cfg);

struct TrainConfig {
  int epochs = 20;
  double lr = 1e-3;
  double decay = 0.93;  // per-epoch multiplicative learning-rate factor
  std::size_t batch = 256;
  std::uint64_t seed = 1;
  ContextConfig context;
};

// Defaults for the ACNP module and the two context-model variants.
TrainConfig acnp_defaults();
TrainConfig ancestor_model_defaults();
TrainConfig window_model_defaults();

using EpochCallback = std::function<void(int epoch, double loss)>;

struct TrainLog {
  std::vector<double> epoch_loss;  // ACNP: MSE; context model: bits per node
};

struct AcnpTrainResult {
  AcnpModel model;
  TrainLog log;
};

AcnpTrainResult train_acnp(const std::vector<NodeSample>& samples, const TrainConfig& cfg,
                           const AcnpConfig& model_cfg, const EpochCallback& on_epoch = {});

struct AcnpEval {
  double mse = 0.0;
  double mean_abs_error = 0.0;
};
AcnpEval evaluate_acnp(const AcnpModel& model, const std::vector<NodeSample>& samples);

// Where the enhanced model's V comes from.
// Uniform feeds the constant 1/8 vector, an uninformative control.
// Given supplies one vector per sample, e.g. out-of-fold ACNP predictions.
enum class NumberSource { None, Acnp, Oracle, Uniform, Given };

struct NumberFeed {
  NumberSource source = NumberSource::None;
  const AcnpModel* acnp = nullptr;                    // required for NumberSource::Acnp
  const std::vector<NumberVector>* given = nullptr;  // required for NumberSource::Given
};

// V for each sample: ACNP prediction, a one-hot at the true count, or 1/8.
std::vector<NumberVector> number_vectors_for(const std::vector<NodeSample>& samples, const NumberFeed& feed);

struct ContextTrainResult {
  ContextModel model;
  TrainLog log;
};

ContextTrainResult train_context_model(const std::vector<NodeSample>& samples, const TrainConfig& cfg,
                                       const ContextModelConfig& model_cfg, const NumberFeed& feed,
                                       const EpochCallback& on_epoch = {});

// Mean cross-entropy in bits per node.
double evaluate_context_model(const ContextModel& model, const std::vector<NodeSample>& samples,
                              const NumberFeed& feed);

// ---- benchmarking ---------------------------------------------------------

struct BenchModel {
  std::string name;
  const CodecModels* models = nullptr;
};

struct BenchRow {
  std::string cloud;
  std::size_t points = 0;
  std::size_t nodes = 0;
  std::vector<double> bpip;            // one per model
  std::vector<double> quantized_bits;  // ideal code length under the coded tables
  std::vector<std::uint64_t> payload_bits;
};

struct BenchReport {
  std::vector<std::string> models;
  std::vector<BenchRow> rows;

  std::vector<double> average_bpip() const;
  // Gain of each model's average BPIP over the first model's, in percent.
  std::vector<double> average_gain() const;
  std::string to_csv() const;
  std::string to_text() const;
};

// Encodes and decodes every cloud with every model. Throws
// VerificationError on any round-trip mismatch or coder-bound violation,
// so a report never carries numbers for a cloud that failed.
BenchReport bench(const std::vector<NamedCloud>& corpus, const std::vector<BenchModel>& models);

// ---- cross-entropy demonstration ------------------------------------------

struct CeParadoxReport {
  OccupancySymbol label = 2;
  std::vector<std::pair<OccupancySymbol, double>> dist_a;
  std::vector<std::pair<OccupancySymbol, double>> dist_b;
  double loss_a = 0.0;  // bits
  double loss_b = 0.0;
  double expected_count_a = 0.0;
  double expected_count_b = 0.0;
  double count_error_a = 0.0;  // |E[count] - true count|
  double count_error_b = 0.0;

  std::string to_text() const;
};

CeParadoxReport demo_ce_paradox();

}  // namespace pcgc
