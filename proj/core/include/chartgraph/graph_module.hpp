#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chartgraph/chart_model.hpp"
#include "chartgraph/fusion.hpp"
#include "chartgraph/gnn.hpp"
#include "chartgraph/tensor_io.hpp"
#include "chartgraph/textual_graph.hpp"
#include "chartgraph/visual_graph.hpp"

namespace chartgraph {

/// Which graph branches feed the fused representation. `None` bypasses
/// the module entirely (bias is zero).
enum class GraphSet : std::uint8_t { Both, VisualOnly, TextualOnly, None };

std::string_view to_string(GraphSet g) noexcept;
std::string_view to_string(BackboneMode m) noexcept;
std::string_view to_string(TextualEdgeMode m) noexcept;

struct GraphModuleConfig {
  BackboneMode backbone = BackboneMode::Patch;
  GraphSet graphs = GraphSet::Both;
  TextualEdgeMode textual_edges = TextualEdgeMode::Rules;
  double distance_scale = 1.0;
  PatchGrid grid{16, 16};  // ignored in ROI mode
};

/// Every learnable tensor of the graph module.
struct GraphModuleParams {
  LinearMap text_proj;    // embed_dim -> dim
  GcnParams visual_gcn;   // dim -> dim -> dim
  GcnParams textual_gcn;  // dim -> dim -> dim
  MlpParams mlp;          // 2*dim -> dim -> dim

  static GraphModuleParams init(std::size_t dim, std::size_t embed_dim, Rng& rng, double dropout = 0.2);
  /// All-zero tensors with the shapes of `like`; used for gradients.
  static GraphModuleParams zeros_like(const GraphModuleParams& like);

  std::size_t dim() const noexcept { return mlp.wb.cols(); }
  std::size_t embed_dim() const noexcept { return text_proj.in_dim(); }

  /// Named mutable views over every tensor, in a fixed order.
  std::vector<std::pair<std::string, std::span<double>>> tensors();
};

using GraphModuleGrads = GraphModuleParams;

TensorFile to_tensor_file(const GraphModuleParams& params, std::map<std::string, std::string> meta = {});
GraphModuleParams graph_module_params_from(const TensorFile& file);

/// Everything about one chart that does not depend on learnable
/// parameters: graphs, normalized adjacencies, text embeddings and the
/// slot alignment. Built once per sample and reused across steps.
struct GraphPlan {
  GraphModuleConfig config;
  std::vector<ChartObject> objects;  // module objects (ROI: kept, slot order)
  std::vector<ObjectId> object_ids;
  WeightedGraph visual;
  TextualGraph textual;
  Matrix visual_adj;
  Matrix textual_adj;
  Matrix text_embeddings;                         // one row per textual node
  std::vector<std::size_t> label_rows;            // textual node of each object
  std::vector<std::vector<std::size_t>> patches;  // Patch mode: P_o per object
  AlignmentIndex alignment;

  std::size_t num_slots() const noexcept { return alignment.size(); }
};

GraphPlan plan_graph_module(const ChartAnnotation& annotation, const GraphModuleConfig& config,
                            const EmbeddingSource& embedder);

/// Textual-node row of each object's label node. Throws
/// Error(MissingLabelNode) when an object has no label node.
std::vector<std::size_t> label_rows_for(const TextualGraph& graph, std::span<const ObjectId> object_ids);

struct GraphModuleTape {
  bool active = false;
  std::size_t num_slots = 0;
  std::size_t num_objects = 0;
  std::size_t dim = 0;
  bool visual_on = false;
  bool textual_on = false;
  GcnTape visual;
  GcnTape textual;
  Matrix text_embeddings;
  MlpTape mlp;
  Matrix text_proj_weight;
};

struct GraphModuleOutput {
  Matrix fused;  // encoder_states + bias
  Matrix bias;
  Matrix graph_repr;  // H_G, one row per module object
  GraphModuleTape tape;
};

struct GraphModuleBackward {
  Matrix d_encoder;
  GraphModuleGrads grads;
};

/// encoder_states has grid.size() rows (Patch) or kRoiSlots rows (Roi).
GraphModuleOutput graph_module_forward(const GraphPlan& plan, const Matrix& encoder_states,
                                       const GraphModuleParams& params, RunMode mode, Rng* rng = nullptr);

GraphModuleOutput graph_module_forward(const ChartAnnotation& annotation, const Matrix& encoder_states,
                                       const GraphModuleConfig& config, const GraphModuleParams& params,
                                       const EmbeddingSource& embedder, RunMode mode, Rng* rng = nullptr);

/// Gradients with respect to the encoder states and every parameter.
GraphModuleBackward graph_module_backward(const GraphPlan& plan, const GraphModuleTape& tape,
                                          const GraphModuleParams& params, const Matrix& d_fused);

}  // namespace chartgraph
