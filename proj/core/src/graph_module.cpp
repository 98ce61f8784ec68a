#include "chartgraph/graph_module.hpp"

#include <string>

#include "chartgraph/error.hpp"

namespace chartgraph {

namespace {

Matrix row_vector(const std::vector<double>& v) { return Matrix(1, v.size(), v); }

std::vector<double> from_row_vector(const Matrix& m, std::string_view name) {
  if (m.rows() != 1) throw Error(ErrorCode::SchemaViolation, std::string(name) + " must be a 1xN tensor");
  return m.data();
}

Matrix column_block(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = m(r, first + c);
  return out;
}

bool uses_visual(GraphSet g) { return g == GraphSet::Both || g == GraphSet::VisualOnly; }
bool uses_textual(GraphSet g) { return g == GraphSet::Both || g == GraphSet::TextualOnly; }

}  // namespace

std::string_view to_string(GraphSet g) noexcept {
  switch (g) {
    case GraphSet::Both: return "both";
    case GraphSet::VisualOnly: return "visual-only";
    case GraphSet::TextualOnly: return "textual-only";
    case GraphSet::None: return "none";
  }
  return "unknown";
}

std::string_view to_string(BackboneMode m) noexcept { return m == BackboneMode::Patch ? "patch" : "roi"; }

std::string_view to_string(TextualEdgeMode m) noexcept {
  return m == TextualEdgeMode::Rules ? "rules" : "fully-connected";
}

GraphModuleParams GraphModuleParams::init(std::size_t dim, std::size_t embed_dim, Rng& rng, double dropout) {
  GraphModuleParams p;
  p.text_proj.weight = glorot_uniform(embed_dim, dim, rng);
  p.text_proj.bias.assign(dim, 0.0);
  p.visual_gcn = GcnParams::glorot(dim, dim, dim, rng, dropout);
  p.textual_gcn = GcnParams::glorot(dim, dim, dim, rng, dropout);
  p.mlp = MlpParams::glorot(2 * dim, dim, dim, rng);
  return p;
}

GraphModuleParams GraphModuleParams::zeros_like(const GraphModuleParams& like) {
  GraphModuleParams z = like;
  for (auto& [name, values] : z.tensors()) std::fill(values.begin(), values.end(), 0.0);
  return z;
}

std::vector<std::pair<std::string, std::span<double>>> GraphModuleParams::tensors() {
  return {
      {"text_proj.weight", text_proj.weight.values()},
      {"text_proj.bias", text_proj.bias},
      {"visual_gcn.w1", visual_gcn.w1.values()},
      {"visual_gcn.w2", visual_gcn.w2.values()},
      {"textual_gcn.w1", textual_gcn.w1.values()},
      {"textual_gcn.w2", textual_gcn.w2.values()},
      {"mlp.wa", mlp.wa.values()},
      {"mlp.ba", mlp.ba},
      {"mlp.wb", mlp.wb.values()},
      {"mlp.bb", mlp.bb},
  };
}

TensorFile to_tensor_file(const GraphModuleParams& params, std::map<std::string, std::string> meta) {
  TensorFile file;
  file.meta = std::move(meta);
  file.meta["kind"] = "graph_module_params";
  file.meta["dim"] = std::to_string(params.dim());
  file.meta["embed_dim"] = std::to_string(params.embed_dim());
  file.meta["gcn_layers"] = "2";
  file.tensors = {
      {"text_proj.weight", params.text_proj.weight},
      {"text_proj.bias", row_vector(params.text_proj.bias)},
      {"visual_gcn.w1", params.visual_gcn.w1},
      {"visual_gcn.w2", params.visual_gcn.w2},
      {"visual_gcn.dropout", Matrix(1, 1, params.visual_gcn.dropout)},
      {"textual_gcn.w1", params.textual_gcn.w1},
      {"textual_gcn.w2", params.textual_gcn.w2},
      {"textual_gcn.dropout", Matrix(1, 1, params.textual_gcn.dropout)},
      {"mlp.wa", params.mlp.wa},
      {"mlp.ba", row_vector(params.mlp.ba)},
      {"mlp.wb", params.mlp.wb},
      {"mlp.bb", row_vector(params.mlp.bb)},
  };
  return file;
}

GraphModuleParams graph_module_params_from(const TensorFile& file) {
  GraphModuleParams p;
  p.text_proj.weight = file.at("text_proj.weight");
  p.text_proj.bias = from_row_vector(file.at("text_proj.bias"), "text_proj.bias");
  p.visual_gcn.w1 = file.at("visual_gcn.w1");
  p.visual_gcn.w2 = file.at("visual_gcn.w2");
  p.visual_gcn.dropout = file.at("visual_gcn.dropout")(0, 0);
  p.textual_gcn.w1 = file.at("textual_gcn.w1");
  p.textual_gcn.w2 = file.at("textual_gcn.w2");
  p.textual_gcn.dropout = file.at("textual_gcn.dropout")(0, 0);
  p.mlp.wa = file.at("mlp.wa");
  p.mlp.ba = from_row_vector(file.at("mlp.ba"), "mlp.ba");
  p.mlp.wb = file.at("mlp.wb");
  p.mlp.bb = from_row_vector(file.at("mlp.bb"), "mlp.bb");

  const std::size_t dim = p.mlp.wb.cols();
  const bool consistent = p.text_proj.weight.cols() == dim && p.text_proj.bias.size() == dim &&
                          p.visual_gcn.w1.rows() == dim && p.visual_gcn.w2.cols() == dim &&
                          p.textual_gcn.w1.rows() == dim && p.textual_gcn.w2.cols() == dim &&
                          p.mlp.wa.rows() == 2 * dim && p.mlp.wb.rows() == p.mlp.wa.cols();
  if (!consistent) throw Error(ErrorCode::SchemaViolation, "graph module tensor shapes are inconsistent");
  return p;
}

std::vector<std::size_t> label_rows_for(const TextualGraph& graph, std::span<const ObjectId> object_ids) {
  std::vector<std::size_t> rows;
  rows.reserve(object_ids.size());
  for (ObjectId id : object_ids) {
    auto node = graph.label_node_of(id);
    if (!node) throw Error(ErrorCode::MissingLabelNode, "no label node for object " + std::to_string(id));
    rows.push_back(*node);
  }
  return rows;
}

GraphPlan plan_graph_module(const ChartAnnotation& annotation, const GraphModuleConfig& config,
                            const EmbeddingSource& embedder) {
  GraphPlan plan;
  plan.config = config;
  if (config.backbone == BackboneMode::Roi) {
    const RoiSelection sel = select_rois(annotation.objects);
    plan.objects = roi_objects(annotation.objects, sel);
    plan.alignment = build_roi_alignment(sel);
  } else {
    plan.objects = annotation.objects;
    plan.alignment = build_patch_alignment(plan.objects, config.grid);
    for (const auto& o : plan.objects) plan.patches.push_back(patch_alignment(o.bbox, config.grid));
  }
  for (const auto& o : plan.objects) plan.object_ids.push_back(o.id);
  if (config.graphs == GraphSet::None || plan.objects.empty()) return plan;

  plan.visual = build_visual_graph(plan.objects, config.distance_scale);
  plan.visual_adj = normalized_adjacency(plan.visual);
  plan.textual = build_textual_graph(plan.objects, config.textual_edges);
  plan.textual_adj = normalized_adjacency(plan.textual);
  const auto texts = node_texts(plan.textual);
  plan.text_embeddings = embed_texts(texts, embedder);
  plan.label_rows = label_rows_for(plan.textual, plan.object_ids);
  return plan;
}

GraphModuleOutput graph_module_forward(const GraphPlan& plan, const Matrix& encoder_states,
                                       const GraphModuleParams& params, RunMode mode, Rng* rng) {
  const std::size_t dim = params.dim();
  if (encoder_states.rows() != plan.num_slots() || encoder_states.cols() != dim) {
    throw Error(ErrorCode::ShapeMismatch, "encoder states are " + std::to_string(encoder_states.rows()) + "x" +
                                              std::to_string(encoder_states.cols()) + ", expected " +
                                              std::to_string(plan.num_slots()) + "x" + std::to_string(dim));
  }
  GraphModuleOutput out;
  const GraphSet graphs = plan.config.graphs;
  const std::size_t n = plan.objects.size();
  if (graphs == GraphSet::None || n == 0) {
    out.bias = Matrix(plan.num_slots(), dim);
    out.fused = encoder_states;
    return out;
  }

  GraphModuleTape& tape = out.tape;
  tape.active = true;
  tape.num_slots = plan.num_slots();
  tape.num_objects = n;
  tape.dim = dim;
  tape.visual_on = uses_visual(graphs);
  tape.textual_on = uses_textual(graphs);

  Matrix hv(n, dim);
  if (tape.visual_on) {
    Matrix v;
    if (plan.config.backbone == BackboneMode::Patch) {
      v = init_visual_nodes_patch(plan.objects, plan.config.grid, encoder_states);
    } else {
      std::vector<std::size_t> slots(n);
      for (std::size_t i = 0; i < n; ++i) slots[i] = i;
      v = init_visual_nodes_roi(gather_rows(encoder_states, slots), plan.objects);
    }
    auto g = gcn_forward(plan.visual_adj, v, params.visual_gcn, mode, rng);
    hv = std::move(g.h);
    tape.visual = std::move(g.tape);
  }

  Matrix ht(n, dim);
  if (tape.textual_on) {
    const Matrix t = init_textual_nodes(plan.textual, plan.text_embeddings, params.text_proj);
    auto g = gcn_forward(plan.textual_adj, t, params.textual_gcn, mode, rng);
    ht = gather_rows(g.h, plan.label_rows);
    tape.textual = std::move(g.tape);
    tape.text_embeddings = plan.text_embeddings;
    tape.text_proj_weight = params.text_proj.weight;
  }

  auto mlp = mlp_forward(concat_object_representations(hv, ht), params.mlp);
  out.graph_repr = std::move(mlp.out);
  tape.mlp = std::move(mlp.tape);
  out.bias = compute_bias(out.graph_repr, plan.object_ids, plan.alignment);
  out.fused = fuse(encoder_states, out.bias);
  return out;
}

GraphModuleOutput graph_module_forward(const ChartAnnotation& annotation, const Matrix& encoder_states,
                                       const GraphModuleConfig& config, const GraphModuleParams& params,
                                       const EmbeddingSource& embedder, RunMode mode, Rng* rng) {
  const GraphPlan plan = plan_graph_module(annotation, config, embedder);
  return graph_module_forward(plan, encoder_states, params, mode, rng);
}

GraphModuleBackward graph_module_backward(const GraphPlan& plan, const GraphModuleTape& tape,
                                          const GraphModuleParams& params, const Matrix& d_fused) {
  GraphModuleBackward back;
  back.grads = GraphModuleParams::zeros_like(params);
  back.d_encoder = d_fused;
  if (!tape.active) return back;
  if (d_fused.rows() != tape.num_slots || d_fused.cols() != tape.dim || plan.objects.size() != tape.num_objects) {
    throw Error(ErrorCode::TapeMismatch, "gradient or plan does not match the recorded forward pass");
  }
  const std::size_t n = tape.num_objects;
  const std::size_t dim = tape.dim;

  const Matrix d_repr = compute_bias_backward(d_fused, plan.object_ids, plan.alignment);
  MlpGrads mg = mlp_backward(tape.mlp, d_repr);
  back.grads.mlp.wa = std::move(mg.dwa);
  back.grads.mlp.ba = std::move(mg.dba);
  back.grads.mlp.wb = std::move(mg.dwb);
  back.grads.mlp.bb = std::move(mg.dbb);

  if (tape.visual_on) {
    GcnGrads vg = gcn_backward(tape.visual, column_block(mg.dinput, 0, dim));
    back.grads.visual_gcn.w1 = std::move(vg.dw1);
    back.grads.visual_gcn.w2 = std::move(vg.dw2);
    for (std::size_t o = 0; o < n; ++o) {
      auto src = vg.dx.row(o);
      if (plan.config.backbone == BackboneMode::Patch) {
        const double count = static_cast<double>(plan.patches[o].size());
        for (std::size_t p : plan.patches[o]) {
          auto dst = back.d_encoder.row(p);
          for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k] / count;
        }
      } else {
        auto dst = back.d_encoder.row(o);
        for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k];
      }
    }
  }

  if (tape.textual_on) {
    const Matrix d_label = column_block(mg.dinput, dim, dim);
    Matrix d_nodes(plan.textual.node_count(), dim);
    for (std::size_t o = 0; o < n; ++o) {
      auto dst = d_nodes.row(plan.label_rows[o]);
      auto src = d_label.row(o);
      for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k];
    }
    GcnGrads tg = gcn_backward(tape.textual, d_nodes);
    back.grads.textual_gcn.w1 = std::move(tg.dw1);
    back.grads.textual_gcn.w2 = std::move(tg.dw2);
    back.grads.text_proj.weight = matmul_tn(tape.text_embeddings, tg.dx);
    back.grads.text_proj.bias = column_sums(tg.dx);
  }
  return back;
}

}  // namespace chartgraph
