#include "chartgraph_cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>

#include "chartgraph/error.hpp"
#include "chartgraph/graph_export.hpp"
#include "chartgraph/graph_module.hpp"
#include "chartgraph/synthetic.hpp"
#include "chartgraph/tensor_io.hpp"
#include "chartgraph/training.hpp"
#include "chartgraph_cli/grad_suite.hpp"

namespace chartgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, BackboneMode> kBackboneNames = {{"patch", BackboneMode::Patch},
                                                            {"roi", BackboneMode::Roi}};
const std::map<std::string, GraphSet> kGraphNames = {{"both", GraphSet::Both},
                                                     {"visual-only", GraphSet::VisualOnly},
                                                     {"textual-only", GraphSet::TextualOnly},
                                                     {"none", GraphSet::None}};
const std::map<std::string, TextualEdgeMode> kEdgeNames = {{"rules", TextualEdgeMode::Rules},
                                                           {"fully-connected", TextualEdgeMode::FullyConnected}};
const std::map<std::string, ChartType> kChartTypes = {
    {"bar", ChartType::Bar}, {"line", ChartType::Line}, {"pie", ChartType::Pie}};

// Flags shared by commands that run the graph module.
struct ModuleFlags {
  std::string backbone = "patch";
  std::string graphs = "both";
  std::string textual_edges = "rules";
  double distance_scale = 1.0;
  std::size_t grid_rows = 16;
  std::size_t grid_cols = 16;
  CLI::Option* rows_opt = nullptr;
  CLI::Option* cols_opt = nullptr;

  void attach(CLI::App& app, bool with_graphs) {
    app.add_option("--backbone", backbone, "patch | roi")->check(CLI::IsMember({"patch", "roi"}));
    if (with_graphs) {
      app.add_option("--graphs", graphs, "both | visual-only | textual-only | none")
          ->check(CLI::IsMember({"both", "visual-only", "textual-only", "none"}));
    }
    app.add_option("--textual-edges", textual_edges, "rules | fully-connected")
        ->check(CLI::IsMember({"rules", "fully-connected"}));
    app.add_option("--distance-scale", distance_scale, "multiplier on box distances")
        ->check(CLI::NonNegativeNumber);
    rows_opt = app.add_option("--grid-rows", grid_rows, "patch grid rows (patch mode)")->check(CLI::PositiveNumber);
    cols_opt = app.add_option("--grid-cols", grid_cols, "patch grid columns (patch mode)")->check(CLI::PositiveNumber);
  }

  GraphModuleConfig config() const {
    GraphModuleConfig c;
    c.backbone = kBackboneNames.at(backbone);
    c.graphs = kGraphNames.at(graphs);
    c.textual_edges = kEdgeNames.at(textual_edges);
    c.distance_scale = distance_scale;
    if (c.backbone == BackboneMode::Roi && (rows_opt->count() > 0 || cols_opt->count() > 0)) {
      throw Error(ErrorCode::InvalidConfig, "--grid-rows/--grid-cols are not allowed with --backbone roi");
    }
    c.grid = PatchGrid(grid_rows, grid_cols);
    return c;
  }
};

void print_warnings(const std::vector<Warning>& warnings, std::ostream& err) {
  for (const auto& w : warnings) {
    err << "warning: " << w.code << ": " << w.message << "\n";
  }
}

ChartAnnotation load_annotation(const std::string& path, std::ostream& err) {
  ChartAnnotation a = parse_annotation(read_file(path));
  print_warnings(validate_semantics(a), err);
  return a;
}

std::string stem_of(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  return stem.empty() ? "chart" : stem;
}

// ---- build-graph -------------------------------------------------------------------

struct BuildGraphArgs {
  std::string annotation;
  std::string out_dir;
  bool dot = false;
  std::string textual_edges = "rules";
  double distance_scale = 1.0;
};

int cmd_build_graph(const BuildGraphArgs& a, std::ostream& out, std::ostream& err) {
  const ChartAnnotation ann = load_annotation(a.annotation, err);
  std::vector<Warning> warnings;
  const WeightedGraph visual = build_visual_graph(ann.objects, a.distance_scale);
  const TextualGraph textual = build_textual_graph(ann.objects, kEdgeNames.at(a.textual_edges), &warnings);
  print_warnings(warnings, err);

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + a.out_dir + ": " + ec.message());
  const fs::path dir(a.out_dir);
  const std::string stem = stem_of(a.annotation);
  const fs::path visual_path = dir / (stem + ".visual.json");
  const fs::path textual_path = dir / (stem + ".textual.json");
  write_file(visual_path, visual_graph_to_json(visual));
  write_file(textual_path, textual_graph_to_json(textual));

  std::size_t label_nodes = 0;
  for (const auto& n : textual.nodes) label_nodes += n.kind == NodeKind::Label;
  std::size_t label_edges = 0;
  for (const auto& e : textual.edges) label_edges += e.i < label_nodes && e.j < label_nodes;

  json summary;
  summary["chart_id"] = ann.chart_id;
  summary["visual"] = {{"path", visual_path.string()}, {"nodes", visual.node_ids.size()}, {"edges", visual.edges.size()}};
  summary["textual"] = {{"path", textual_path.string()},
                        {"nodes", textual.nodes.size()},
                        {"label_nodes", label_nodes},
                        {"edges", textual.edges.size()},
                        {"label_edges", label_edges},
                        {"mode", std::string(to_string(kEdgeNames.at(a.textual_edges)))}};
  if (a.dot) {
    const fs::path vdot = dir / (stem + ".visual.dot");
    const fs::path tdot = dir / (stem + ".textual.dot");
    write_file(vdot, visual_graph_to_dot(visual));
    write_file(tdot, textual_graph_to_dot(textual));
    summary["visual"]["dot"] = vdot.string();
    summary["textual"]["dot"] = tdot.string();
  }
  out << summary.dump(2) << "\n";
  return kExitOk;
}

// ---- grad-check --------------------------------------------------------------------

int cmd_grad_check(const GradSuiteOptions& opts, std::ostream& out, std::ostream& err) {
  const auto results = run_grad_suite(opts);
  int code = kExitOk;
  char line[160];
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-20s max_rel_err=%.3e %s\n", r.block.c_str(), r.max_rel_err,
                  r.passed ? "ok" : "FAIL");
    out << line;
    if (!r.passed) {
      err << "grad-check failed in block " << r.block << "\n";
      code = kExitGradCheck;
    }
  }
  return code;
}

// ---- gen-train-eval ----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::string> graphs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  bool quiet = false;
};

int cmd_gen_train_eval(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : config_from_json(read_file(a.config));
  if (a.graphs) config.module.graphs = kGraphNames.at(*a.graphs);
  if (a.seed) config.seed = *a.seed;
  if (a.epochs) config.epochs = *a.epochs;
  validate(config);
  auto progress = [&](std::size_t epoch, double nll) {
    if (!a.quiet) err << "epoch " << epoch + 1 << "/" << config.epochs << " nll " << nll << "\n";
  };
  const TrainResult result = train(config, progress);
  const std::string report = report_to_json(result.report);
  if (a.out.empty()) {
    out << report;
  } else {
    write_file(a.out, report);
    json summary = {{"report", a.out},
                    {"initial_nll", result.report.initial_nll},
                    {"final_nll", result.report.final_nll()},
                    {"relaxed_accuracy", result.report.relaxed_accuracy}};
    out << summary.dump(2) << "\n";
  }
  return kExitOk;
}

// ---- generate ------------------------------------------------------------------------

struct GenerateArgs {
  std::string type = "bar";
  std::size_t elements = 3;
  std::uint64_t seed = 0;
  std::string out;
  std::string states;
  std::size_t dim = 32;
  ModuleFlags module;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream&) {
  Rng rng(a.seed);
  const ChartSample s = generate_synthetic_chart(rng, {kChartTypes.at(a.type), a.elements});
  const Vocabulary& vocab = Vocabulary::standard();
  std::string question;
  for (TokenId t : s.question_tokens) {
    if (!question.empty()) question += ' ';
    question += vocab.token(t);
  }

  json summary = {{"chart_id", s.annotation.chart_id},
                  {"objects", s.annotation.objects.size()},
                  {"question", question},
                  {"answer", s.answer_text}};
  if (!a.states.empty()) {
    const GraphModuleConfig config = a.module.config();
    const PseudoEncoder encoder(a.seed, a.dim);
    Matrix states = config.backbone == BackboneMode::Patch ? encoder.encode_patches(s.annotation, config.grid)
                                                           : encoder.encode_rois(s.annotation);
    TensorFile file;
    file.meta = {{"kind", "encoder-states"}, {"backbone", std::string(to_string(config.backbone))}};
    file.tensors.push_back({"states", std::move(states)});
    write_tensor_file(a.states, file);
    summary["states"] = a.states;
  }
  if (a.out.empty()) {
    out << serialize_annotation(s.annotation) << "\n";
  } else {
    write_file(a.out, serialize_annotation(s.annotation));
    summary["annotation"] = a.out;
    out << summary.dump(2) << "\n";
  }
  return kExitOk;
}

// ---- init-params ---------------------------------------------------------------------

struct InitArgs {
  std::size_t dim = 32;
  std::size_t embed_dim = 64;
  double dropout = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_init_params(const InitArgs& a, std::ostream& out, std::ostream&) {
  Rng rng(a.seed);
  const GraphModuleParams params = GraphModuleParams::init(a.dim, a.embed_dim, rng, a.dropout);
  write_tensor_file(a.out, to_tensor_file(params, {{"seed", std::to_string(a.seed)}}));
  out << json{{"params", a.out}, {"dim", a.dim}, {"embed_dim", a.embed_dim}}.dump(2) << "\n";
  return kExitOk;
}

// ---- fuse ----------------------------------------------------------------------------

struct FuseArgs {
  std::string annotation;
  std::string states;
  std::string params;
  std::string embeddings;
  std::string out;
  ModuleFlags module;
};

int cmd_fuse(const FuseArgs& a, std::ostream& out, std::ostream& err) {
  const GraphModuleConfig config = a.module.config();
  const ChartAnnotation ann = load_annotation(a.annotation, err);
  const TensorFile states_file = read_tensor_file(a.states);
  if (states_file.tensors.size() != 1) {
    throw Error(ErrorCode::SchemaViolation, "states file must hold exactly one tensor");
  }
  const Matrix& states = states_file.tensors.front().value;
  const GraphModuleParams params = graph_module_params_from(read_tensor_file(a.params));
  EmbeddingSource embedder = HashedEmbedder{params.embed_dim()};
  if (!a.embeddings.empty()) embedder = parse_embeddings(read_file(a.embeddings));

  const GraphPlan plan = plan_graph_module(ann, config, embedder);
  GraphModuleOutput result = graph_module_forward(plan, states, params, RunMode::Eval);
  TensorFile file;
  file.meta = {{"kind", "fused-states"},
               {"chart_id", ann.chart_id},
               {"backbone", std::string(to_string(config.backbone))},
               {"graphs", std::string(to_string(config.graphs))},
               {"textual_edges", std::string(to_string(config.textual_edges))}};
  file.tensors.push_back({"fused", std::move(result.fused)});
  file.tensors.push_back({"bias", std::move(result.bias)});
  file.tensors.push_back({"graph_repr", std::move(result.graph_repr)});
  write_tensor_file(a.out, file);
  out << json{{"out", a.out}, {"slots", plan.num_slots()}, {"objects", plan.object_ids.size()}}.dump(2) << "\n";
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return kExitIo;
    case ErrorCode::DivergedLoss: return kExitDiverged;
    default: return kExitInput;
  }
}

}  // namespace

std::string version_text() {
  return std::string("chartgraph 0.1.0\n") + "visual-graph: " + std::string(kVisualGraphFormat) + "\n" +
         "textual-graph: " + std::string(kTextualGraphFormat) + "\n" + "tensors: " + std::string(kTensorMagic) +
         " v" + std::to_string(kTensorFormatVersion) + "\n" +
         "dataset: chartgraph-dataset/1\n"
         "train-report: chartgraph-train-report/1\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scene-graph construction and fusion for chart understanding", "chartgraph"};
  app.require_subcommand(1);
  bool show_version = false;
  app.add_flag("--version", show_version, "print format versions and exit");

  BuildGraphArgs bg;
  auto* build = app.add_subcommand("build-graph", "write visual and textual graphs for an annotation");
  build->add_option("annotation", bg.annotation, "annotation JSON file")->required();
  build->add_option("--out-dir", bg.out_dir, "output directory")->required();
  build->add_flag("--dot", bg.dot, "also write Graphviz DOT files");
  build->add_option("--textual-edges", bg.textual_edges, "rules | fully-connected")
      ->check(CLI::IsMember({"rules", "fully-connected"}));
  build->add_option("--distance-scale", bg.distance_scale, "multiplier on box distances")
      ->check(CLI::NonNegativeNumber);

  GradSuiteOptions gc;
  auto* grad = app.add_subcommand("grad-check", "finite-difference check of every backward pass");
  grad->add_option("--seed", gc.seed);
  grad->add_option("--nodes", gc.nodes, "node count for GCN/MLP blocks")->check(CLI::Range(1, 64));
  grad->add_option("--dim", gc.dim, "hidden width")->check(CLI::Range(1, 64));
  grad->add_option("--embed-dim", gc.embed_dim, "text embedding width")->check(CLI::Range(1, 256));
  grad->add_option("--grid", gc.grid, "patch grid side for the full module")->check(CLI::Range(1, 32));
  grad->add_option("--inject-fault", gc.inject_fault)->group("");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("gen-train-eval", "generate toy data, train and evaluate");
  train_cmd->add_option("--config", tr.config, "JSON config (defaults when omitted)");
  train_cmd->add_option("--out", tr.out, "report path (stdout when omitted)");
  train_cmd->add_option("--graphs", tr.graphs, "override graph set")
      ->check(CLI::IsMember({"both", "visual-only", "textual-only", "none"}));
  train_cmd->add_option("--seed", tr.seed, "override seed");
  train_cmd->add_option("--epochs", tr.epochs, "override epoch count");
  train_cmd->add_flag("--quiet", tr.quiet, "no per-epoch progress on stderr");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "emit one synthetic chart annotation");
  generate->add_option("--type", gen.type)->check(CLI::IsMember({"bar", "line", "pie"}));
  generate->add_option("--elements", gen.elements, "bars, series or slices")->check(CLI::Range(1, 8));
  generate->add_option("--seed", gen.seed);
  generate->add_option("--out", gen.out, "annotation path (stdout when omitted)");
  generate->add_option("--states", gen.states, "also write pseudo-encoder states here");
  generate->add_option("--dim", gen.dim, "encoder state width")->check(CLI::PositiveNumber);
  gen.module.attach(*generate, false);

  InitArgs init;
  auto* init_cmd = app.add_subcommand("init-params", "write freshly initialized graph-module parameters");
  init_cmd->add_option("--dim", init.dim)->check(CLI::PositiveNumber);
  init_cmd->add_option("--embed-dim", init.embed_dim)->check(CLI::PositiveNumber);
  init_cmd->add_option("--dropout", init.dropout)->check(CLI::Range(0.0, 0.999));
  init_cmd->add_option("--seed", init.seed);
  init_cmd->add_option("--out", init.out)->required();

  FuseArgs fu;
  auto* fuse_cmd = app.add_subcommand("fuse", "run the graph module and add its bias to encoder states");
  fuse_cmd->add_option("annotation", fu.annotation)->required();
  fuse_cmd->add_option("--states", fu.states, "tensor file with one states tensor")->required();
  fuse_cmd->add_option("--params", fu.params, "graph-module parameter file")->required();
  fuse_cmd->add_option("--embeddings", fu.embeddings, "precomputed text embeddings (JSON)");
  fuse_cmd->add_option("--out", fu.out)->required();
  fu.module.attach(*fuse_cmd, true);

  std::vector<std::string> argv_storage = {"chartgraph"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  // --version must work without a subcommand.
  if (args.size() == 1 && args.front() == "--version") {
    out << version_text();
    return kExitOk;
  }

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (show_version) {
      out << version_text();
      return kExitOk;
    }
    if (*build) return cmd_build_graph(bg, out, err);
    if (*grad) return cmd_grad_check(gc, out, err);
    if (*train_cmd) return cmd_gen_train_eval(tr, out, err);
    if (*generate) return cmd_generate(gen, out, err);
    if (*init_cmd) return cmd_init_params(init, out, err);
    if (*fuse_cmd) return cmd_fuse(fu, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return kExitInput;
}

}  // namespace chartgraph::cli
