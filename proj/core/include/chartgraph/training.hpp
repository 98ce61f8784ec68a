#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "chartgraph/decoder.hpp"
#include "chartgraph/graph_module.hpp"
#include "chartgraph/synthetic.hpp"

namespace chartgraph {

enum class OptimizerKind : std::uint8_t { Sgd, AdamW };

struct TrainConfig {
  std::size_t train_size = 500;
  std::size_t test_size = 200;
  std::size_t epochs = 30;
  double lr = 0.003;
  std::size_t batch = 8;
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double weight_decay = 0.0;  // AdamW only
  std::uint64_t seed = 42;

  GraphModuleConfig module;  // backbone, graph set, textual edges, grid, distance scale
  std::size_t dim = 32;
  std::size_t embed_dim = 64;
  double dropout = 0.2;
  std::size_t decoder_embed = 16;
  std::size_t decoder_hidden = 64;
};

/// Throws Error(InvalidConfig) naming the offending field.
void validate(const TrainConfig& config);

/// Canonical JSON (sorted keys) of every field.
std::string config_to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig config_from_json(std::string_view bytes);
/// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const TrainConfig& config);

/// Deterministic sample set: sample k draws from Rng(seed).fork(k).
/// Chart types cycle through bar/line/pie with random element counts.
std::vector<ChartSample> generate_dataset(const TrainConfig& config, std::uint64_t seed, std::size_t count);

/// One JSON header line (format, seed, config hash, count) followed by
/// one JSON record per sample.
std::string serialize_dataset(const std::vector<ChartSample>& samples, const TrainConfig& config,
                              std::uint64_t seed);
std::vector<ChartSample> parse_dataset(std::string_view bytes);

struct TrainReport {
  TrainConfig config;
  std::string config_hash;
  std::uint64_t seed = 0;
  double initial_nll = 0.0;         // eval-mode mean NLL on the train split before any update
  std::vector<double> epoch_nll;    // eval-mode mean NLL on the train split after each epoch
  double test_nll = 0.0;
  double relaxed_accuracy = 0.0;    // greedy answers on the held-out split
  std::size_t train_size = 0;
  std::size_t test_size = 0;

  double final_nll() const { return epoch_nll.empty() ? initial_nll : epoch_nll.back(); }
};

std::string report_to_json(const TrainReport& report);

struct Model {
  GraphModuleParams graph;
  DecoderParams decoder;
};

Model init_model(const TrainConfig& config);

/// Per-sample loss and gradients with respect to every model parameter.
struct SampleLoss {
  double loss = 0.0;
  GraphModuleGrads graph_grads;
  DecoderGrads decoder_grads;
};

SampleLoss sample_loss_and_grads(const GraphPlan& plan, const ChartSample& sample, const Model& model,
                                 RunMode mode, Rng* rng);
double sample_loss(const GraphPlan& plan, const ChartSample& sample, const Model& model);
std::string predict_answer(const GraphPlan& plan, const ChartSample& sample, const Model& model);

/// Plain SGD or decoupled-weight-decay Adam over named parameter views.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, double weight_decay);
  void step(Model& model, SampleLoss& grads);

 private:
  void update(std::span<double> param, std::span<const double> grad, std::vector<double>& m,
              std::vector<double>& v);
  OptimizerKind kind_;
  double lr_;
  double weight_decay_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

struct TrainResult {
  TrainReport report;
  Model model;
};

/// Generates train/test splits from the seed, trains with mini-batch
/// updates and evaluates. Throws Error(DivergedLoss) on a non-finite
/// loss. `progress` (optional) receives each epoch's NLL.
TrainResult train(const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& progress = nullptr);

}  // namespace chartgraph
