#include "chartgraph/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numeric>

#include "chartgraph/error.hpp"
#include "chartgraph/metrics.hpp"

namespace chartgraph {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxAnswerLen = 4;

// Seed streams derived from TrainConfig::seed.
constexpr std::uint64_t kEncoderStream = 0x656e63;
constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kShuffleStream = 0x10000;
constexpr std::uint64_t kDropoutStream = 0x20000;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& text, const std::array<std::pair<std::string_view, Enum>, N>& table,
               const char* field) {
  for (const auto& [name, value] : table)
    if (name == text) return value;
  invalid(std::string(field) + ": unknown value '" + text + "'");
}

constexpr std::array<std::pair<std::string_view, GraphSet>, 4> kGraphSets = {{
    {"both", GraphSet::Both},
    {"visual-only", GraphSet::VisualOnly},
    {"textual-only", GraphSet::TextualOnly},
    {"none", GraphSet::None},
}};
constexpr std::array<std::pair<std::string_view, BackboneMode>, 2> kBackbones = {{
    {"patch", BackboneMode::Patch},
    {"roi", BackboneMode::Roi},
}};
constexpr std::array<std::pair<std::string_view, TextualEdgeMode>, 2> kEdgeModes = {{
    {"rules", TextualEdgeMode::Rules},
    {"fully-connected", TextualEdgeMode::FullyConnected},
}};
constexpr std::array<std::pair<std::string_view, OptimizerKind>, 2> kOptimizers = {{
    {"sgd", OptimizerKind::Sgd},
    {"adamw", OptimizerKind::AdamW},
}};

json config_json(const TrainConfig& c) {
  json j;
  j["train_size"] = c.train_size;
  j["test_size"] = c.test_size;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["batch"] = c.batch;
  j["optimizer"] = c.optimizer == OptimizerKind::Sgd ? "sgd" : "adamw";
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["backbone"] = std::string(to_string(c.module.backbone));
  j["graphs"] = std::string(to_string(c.module.graphs));
  j["textual_edges"] = std::string(to_string(c.module.textual_edges));
  j["distance_scale"] = c.module.distance_scale;
  j["grid_rows"] = c.module.grid.rows;
  j["grid_cols"] = c.module.grid.cols;
  j["dim"] = c.dim;
  j["embed_dim"] = c.embed_dim;
  j["dropout"] = c.dropout;
  j["decoder_embed"] = c.decoder_embed;
  j["decoder_hidden"] = c.decoder_hidden;
  return j;
}

json matrix_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

Matrix matrix_from_json(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

PseudoEncoder encoder_for(const TrainConfig& config) {
  return PseudoEncoder(Rng(config.seed).fork(kEncoderStream).next_u64(), config.dim);
}

template <typename A, typename B>
void accumulate(A& acc, B& add) {
  auto dst = acc.tensors();
  auto src = add.tensors();
  for (std::size_t t = 0; t < dst.size(); ++t) {
    auto d = dst[t].second;
    auto s = src[t].second;
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
  }
}

template <typename A>
void scale(A& acc, double s) {
  for (auto& [name, values] : acc.tensors())
    for (double& v : values) v *= s;
}

bool all_finite(Model& m) {
  auto finite = [](auto tensors) {
    for (auto& [name, values] : tensors)
      for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
  };
  return finite(m.graph.tensors()) && finite(m.decoder.tensors());
}

}  // namespace

// ---- config -----------------------------------------------------------------

void validate(const TrainConfig& c) {
  if (c.train_size == 0) invalid("train_size must be >= 1");
  if (c.batch == 0) invalid("batch must be >= 1");
  if (!std::isfinite(c.lr) || c.lr < 0.0) invalid("lr must be finite and >= 0");
  if (!std::isfinite(c.weight_decay) || c.weight_decay < 0.0) invalid("weight_decay must be finite and >= 0");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) invalid("dropout must lie in [0, 1)");
  if (c.dim == 0 || c.embed_dim == 0 || c.decoder_embed == 0 || c.decoder_hidden == 0) {
    invalid("dimensions must be positive");
  }
  if (c.module.grid.rows == 0 || c.module.grid.cols == 0) invalid("grid must be at least 1x1");
  if (!std::isfinite(c.module.distance_scale) || c.module.distance_scale < 0.0) {
    invalid("distance_scale must be finite and >= 0");
  }
}

std::string config_to_json(const TrainConfig& config) { return config_json(config).dump(); }

TrainConfig config_from_json(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) invalid("config must be a JSON object");
  TrainConfig c;
  const json known = config_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) invalid("unknown config key '" + key + "'");
  }
  try {
    auto get_size = [&](const char* key, std::size_t& out) {
      if (j.contains(key)) out = j.at(key).get<std::size_t>();
    };
    auto get_double = [&](const char* key, double& out) {
      if (j.contains(key)) out = j.at(key).get<double>();
    };
    get_size("train_size", c.train_size);
    get_size("test_size", c.test_size);
    get_size("epochs", c.epochs);
    get_double("lr", c.lr);
    get_size("batch", c.batch);
    get_double("weight_decay", c.weight_decay);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("optimizer")) c.optimizer = enum_from(j.at("optimizer").get<std::string>(), kOptimizers, "optimizer");
    if (j.contains("backbone")) c.module.backbone = enum_from(j.at("backbone").get<std::string>(), kBackbones, "backbone");
    if (j.contains("graphs")) c.module.graphs = enum_from(j.at("graphs").get<std::string>(), kGraphSets, "graphs");
    if (j.contains("textual_edges")) {
      c.module.textual_edges = enum_from(j.at("textual_edges").get<std::string>(), kEdgeModes, "textual_edges");
    }
    get_double("distance_scale", c.module.distance_scale);
    get_size("grid_rows", c.module.grid.rows);
    get_size("grid_cols", c.module.grid.cols);
    get_size("dim", c.dim);
    get_size("embed_dim", c.embed_dim);
    get_double("dropout", c.dropout);
    get_size("decoder_embed", c.decoder_embed);
    get_size("decoder_hidden", c.decoder_hidden);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config field has the wrong type: ") + e.what());
  }
  validate(c);
  return c;
}

std::string config_hash(const TrainConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_to_json(config))));
  return buf;
}

// ---- dataset ------------------------------------------------------------------

std::vector<ChartSample> generate_dataset(const TrainConfig& config, std::uint64_t seed, std::size_t count) {
  const PseudoEncoder encoder = encoder_for(config);
  const Rng base(seed);
  std::vector<ChartSample> samples;
  samples.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = base.fork(k);
    ChartSpec spec;
    switch (rng.below(3)) {
      case 0:
        spec = {ChartType::Bar, static_cast<std::size_t>(rng.between(2, 5))};
        break;
      case 1:
        spec = {ChartType::Line, static_cast<std::size_t>(rng.between(1, 3))};
        break;
      default:
        spec = {ChartType::Pie, static_cast<std::size_t>(rng.between(2, 4))};
        break;
    }
    ChartSample s = generate_synthetic_chart(rng, spec);
    s.encoder_states = config.module.backbone == BackboneMode::Patch
                           ? encoder.encode_patches(s.annotation, config.module.grid)
                           : encoder.encode_rois(s.annotation);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string serialize_dataset(const std::vector<ChartSample>& samples, const TrainConfig& config,
                              std::uint64_t seed) {
  json header;
  header["format"] = "chartgraph-dataset/1";
  header["seed"] = seed;
  header["config_hash"] = config_hash(config);
  header["count"] = samples.size();
  std::string out = header.dump() + "\n";
  for (const auto& s : samples) {
    json rec;
    rec["annotation"] = json::parse(serialize_annotation(s.annotation));
    rec["encoder_states"] = matrix_json(s.encoder_states);
    rec["question"] = s.question_tokens;
    rec["answer"] = s.answer_tokens;
    rec["answer_text"] = s.answer_text;
    out += rec.dump() + "\n";
  }
  return out;
}

std::vector<ChartSample> parse_dataset(std::string_view bytes) {
  std::vector<ChartSample> samples;
  std::size_t pos = 0;
  bool header_seen = false;
  std::size_t expected = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    const std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedInput, std::string("dataset line: ") + e.what());
    }
    try {
      if (!header_seen) {
        if (rec.value("format", "") != "chartgraph-dataset/1") {
          throw Error(ErrorCode::SchemaViolation, "dataset header has an unexpected format tag");
        }
        expected = rec.at("count").get<std::size_t>();
        header_seen = true;
        continue;
      }
      ChartSample s;
      s.annotation = parse_annotation(rec.at("annotation").dump());
      s.encoder_states = matrix_from_json(rec.at("encoder_states"));
      s.question_tokens = rec.at("question").get<std::vector<TokenId>>();
      s.answer_tokens = rec.at("answer").get<std::vector<TokenId>>();
      s.answer_text = rec.at("answer_text").get<std::string>();
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, std::string("dataset record: ") + e.what());
    }
  }
  if (!header_seen) throw Error(ErrorCode::MalformedInput, "dataset is missing its header line");
  if (samples.size() != expected) throw Error(ErrorCode::SchemaViolation, "dataset record count does not match header");
  return samples;
}

std::string report_to_json(const TrainReport& r) {
  json j;
  j["format"] = "chartgraph-train-report/1";
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["config"] = config_json(r.config);
  j["initial_nll"] = r.initial_nll;
  j["epoch_nll"] = r.epoch_nll;
  j["final_nll"] = r.final_nll();
  j["test_nll"] = r.test_nll;
  j["relaxed_accuracy"] = r.relaxed_accuracy;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  return j.dump(2) + "\n";
}

// ---- model ------------------------------------------------------------------------

Model init_model(const TrainConfig& config) {
  Rng rng = Rng(config.seed).fork(kInitStream);
  Model m;
  m.graph = GraphModuleParams::init(config.dim, config.embed_dim, rng, config.dropout);
  m.decoder = DecoderParams::init(config.dim, config.decoder_embed, config.decoder_hidden,
                                  Vocabulary::standard().size(), rng);
  return m;
}

SampleLoss sample_loss_and_grads(const GraphPlan& plan, const ChartSample& sample, const Model& model,
                                 RunMode mode, Rng* rng) {
  const GraphModuleOutput gm = graph_module_forward(plan, sample.encoder_states, model.graph, mode, rng);
  const DecoderOutput dec = decoder_forward(gm.fused, sample.question_tokens, sample.answer_tokens, model.decoder);
  NllResult nll = nll_loss(dec.logits, sample.answer_tokens);
  DecoderBackward db = decoder_backward(dec.tape, model.decoder, nll.dlogits);
  GraphModuleBackward gb = graph_module_backward(plan, gm.tape, model.graph, db.d_states);
  return {nll.loss, std::move(gb.grads), std::move(db.grads)};
}

double sample_loss(const GraphPlan& plan, const ChartSample& sample, const Model& model) {
  const GraphModuleOutput gm = graph_module_forward(plan, sample.encoder_states, model.graph, RunMode::Eval);
  const DecoderOutput dec = decoder_forward(gm.fused, sample.question_tokens, sample.answer_tokens, model.decoder);
  return nll_loss(dec.logits, sample.answer_tokens).loss;
}

std::string predict_answer(const GraphPlan& plan, const ChartSample& sample, const Model& model) {
  const Vocabulary& vocab = Vocabulary::standard();
  const GraphModuleOutput gm = graph_module_forward(plan, sample.encoder_states, model.graph, RunMode::Eval);
  return vocab.detokenize(
      decoder_greedy(gm.fused, sample.question_tokens, model.decoder, vocab.bos(), vocab.eos(), kMaxAnswerLen));
}

// ---- optimizer -----------------------------------------------------------------------

Optimizer::Optimizer(OptimizerKind kind, double lr, double weight_decay)
    : kind_(kind), lr_(lr), weight_decay_(weight_decay) {}

void Optimizer::update(std::span<double> param, std::span<const double> grad, std::vector<double>& m,
                       std::vector<double>& v) {
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t k = 0; k < param.size(); ++k) param[k] -= lr_ * grad[k];
    return;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (m.empty()) {
    m.assign(param.size(), 0.0);
    v.assign(param.size(), 0.0);
  }
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < param.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
    const double mhat = m[k] / c1;
    const double vhat = v[k] / c2;
    param[k] -= lr_ * (mhat / (std::sqrt(vhat) + eps) + weight_decay_ * param[k]);
  }
}

void Optimizer::step(Model& model, SampleLoss& grads) {
  ++t_;
  auto params = model.graph.tensors();
  auto dec = model.decoder.tensors();
  params.insert(params.end(), dec.begin(), dec.end());
  auto g = grads.graph_grads.tensors();
  auto gd = grads.decoder_grads.tensors();
  g.insert(g.end(), gd.begin(), gd.end());
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
  }
  for (std::size_t t = 0; t < params.size(); ++t) update(params[t].second, g[t].second, m_[t], v_[t]);
}

// ---- training loop --------------------------------------------------------------------

TrainResult train(const TrainConfig& config, const std::function<void(std::size_t, double)>& progress) {
  validate(config);
  const EmbeddingSource embedder = HashedEmbedder{config.embed_dim};
  auto all = generate_dataset(config, config.seed, config.train_size + config.test_size);
  std::vector<ChartSample> train_set(std::make_move_iterator(all.begin()),
                                     std::make_move_iterator(all.begin() + static_cast<long>(config.train_size)));
  std::vector<ChartSample> test_set(std::make_move_iterator(all.begin() + static_cast<long>(config.train_size)),
                                    std::make_move_iterator(all.end()));

  auto plan_all = [&](const std::vector<ChartSample>& samples) {
    std::vector<GraphPlan> plans;
    plans.reserve(samples.size());
    for (const auto& s : samples) plans.push_back(plan_graph_module(s.annotation, config.module, embedder));
    return plans;
  };
  const auto train_plans = plan_all(train_set);
  const auto test_plans = plan_all(test_set);

  TrainResult result;
  Model& model = result.model;
  model = init_model(config);

  auto mean_nll = [&](const std::vector<ChartSample>& samples, const std::vector<GraphPlan>& plans) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) total += sample_loss(plans[i], samples[i], model);
    const double mean = total / static_cast<double>(samples.size());
    if (!std::isfinite(mean)) throw Error(ErrorCode::DivergedLoss, "mean NLL became non-finite");
    return mean;
  };

  TrainReport& report = result.report;
  report.config = config;
  report.config_hash = config_hash(config);
  report.seed = config.seed;
  report.train_size = train_set.size();
  report.test_size = test_set.size();
  report.initial_nll = mean_nll(train_set, train_plans);

  Optimizer optimizer(config.optimizer, config.lr, config.weight_decay);
  const Rng root(config.seed);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = root.fork(kShuffleStream + epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    Rng dropout = root.fork(kDropoutStream + epoch);

    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t stop = std::min(order.size(), start + config.batch);
      SampleLoss acc;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        SampleLoss s = sample_loss_and_grads(train_plans[i], train_set[i], model, RunMode::Train, &dropout);
        if (!std::isfinite(s.loss)) {
          throw Error(ErrorCode::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch));
        }
        if (b == start) {
          acc = std::move(s);
        } else {
          accumulate(acc.graph_grads, s.graph_grads);
          accumulate(acc.decoder_grads, s.decoder_grads);
        }
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      scale(acc.graph_grads, inv);
      scale(acc.decoder_grads, inv);
      optimizer.step(model, acc);
      if (!all_finite(model)) {
        throw Error(ErrorCode::DivergedLoss, "parameters became non-finite at epoch " + std::to_string(epoch));
      }
    }
    report.epoch_nll.push_back(mean_nll(train_set, train_plans));
    if (progress) progress(epoch, report.epoch_nll.back());
  }

  report.test_nll = mean_nll(test_set, test_plans);
  std::vector<std::string> predictions;
  std::vector<std::string> golds;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    predictions.push_back(predict_answer(test_plans[i], test_set[i], model));
    golds.push_back(test_set[i].answer_text);
  }
  report.relaxed_accuracy = test_set.empty() ? 0.0 : relaxed_accuracy(predictions, golds);
  return result;
}

}  // namespace chartgraph
