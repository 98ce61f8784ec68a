#include "chartgraph/textual_graph.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "chartgraph/error.hpp"
#include "chartgraph/geometry.hpp"
#include "chartgraph/rng.hpp"

namespace chartgraph {

namespace {

bool is_value_shape(ObjectClass c) {
  return c == ObjectClass::Bar || c == ObjectClass::Line || c == ObjectClass::DotLine;
}

class EdgeSet {
 public:
  void add(std::size_t a, std::size_t b, EdgeRule rule) {
    if (a == b) return;
    const auto key = std::minmax(a, b);
    auto [it, inserted] = edges_.try_emplace({key.first, key.second}, rule);
    if (!inserted && rule < it->second) it->second = rule;
  }

  std::vector<RuleEdge> sorted() const {
    std::vector<RuleEdge> out;
    out.reserve(edges_.size());
    for (const auto& [key, rule] : edges_) out.push_back({key.first, key.second, rule});
    return out;  // std::map iterates in (i, j) order
  }

 private:
  std::map<std::pair<std::size_t, std::size_t>, EdgeRule> edges_;
};

bool has_ocr_node(const ChartObject& o) { return o.ocr_text.has_value() && !is_shape(o.cls); }

}  // namespace

std::string_view rule_name(EdgeRule r) noexcept {
  switch (r) {
    case EdgeRule::AxisTitleToLabel: return "AxisTitleToLabel";
    case EdgeRule::AxisLabelToShape: return "AxisLabelToShape";
    case EdgeRule::LegendLabelToMarker: return "LegendLabelToMarker";
    case EdgeRule::PieToSlice: return "PieToSlice";
    case EdgeRule::PieLabelToSlice: return "PieLabelToSlice";
    case EdgeRule::OcrToLabel: return "OcrToLabel";
    case EdgeRule::FullyConnected: return "FullyConnected";
  }
  return "Unknown";
}

std::optional<std::size_t> TextualGraph::label_node_of(ObjectId id) const noexcept {
  for (const auto& n : nodes)
    if (n.kind == NodeKind::Label && n.object_id == id) return n.index;
  return std::nullopt;
}

TextualGraph build_textual_graph(std::span<const ChartObject> objects, TextualEdgeMode mode,
                                 std::vector<Warning>* warnings) {
  if (objects.empty()) throw Error(ErrorCode::EmptyAnnotation, "textual graph needs at least one object");

  TextualGraph g;
  const std::size_t n = objects.size();
  for (std::size_t o = 0; o < n; ++o) {
    g.nodes.push_back({o, NodeKind::Label, objects[o].id, std::string(class_name(objects[o].cls))});
  }
  std::unordered_map<ObjectId, std::size_t> label_of;
  for (std::size_t o = 0; o < n; ++o) label_of.emplace(objects[o].id, o);

  EdgeSet edges;
  for (std::size_t o = 0; o < n; ++o) {
    if (!has_ocr_node(objects[o])) continue;
    const std::size_t idx = g.nodes.size();
    g.nodes.push_back({idx, NodeKind::Ocr, objects[o].id, *objects[o].ocr_text});
    edges.add(idx, o, EdgeRule::OcrToLabel);
  }

  auto warn = [&](std::string code, std::string message, ObjectId id) {
    if (warnings) warnings->push_back({std::move(code), std::move(message), id});
  };

  if (mode == TextualEdgeMode::FullyConnected) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) edges.add(a, b, EdgeRule::FullyConnected);
    g.edges = edges.sorted();
    return g;
  }

  for (std::size_t a = 0; a < n; ++a) {
    const ChartObject& src = objects[a];
    switch (src.cls) {
      case ObjectClass::XAxisTitle:
      case ObjectClass::YAxisTitle: {
        const ObjectClass target =
            src.cls == ObjectClass::XAxisTitle ? ObjectClass::XAxisLabel : ObjectClass::YAxisLabel;
        for (std::size_t b = 0; b < n; ++b)
          if (objects[b].cls == target) edges.add(a, b, EdgeRule::AxisTitleToLabel);
        break;
      }
      case ObjectClass::XAxisLabel:
      case ObjectClass::YAxisLabel: {
        const bool x_axis = src.cls == ObjectClass::XAxisLabel;
        for (std::size_t b = 0; b < n; ++b) {
          if (!is_value_shape(objects[b].cls)) continue;
          const bool overlap = x_axis ? interval_overlap_x(src.bbox, objects[b].bbox)
                                      : interval_overlap_y(src.bbox, objects[b].bbox);
          if (overlap) edges.add(a, b, EdgeRule::AxisLabelToShape);
        }
        break;
      }
      case ObjectClass::LegendLabel:
      case ObjectClass::PieLabel: {
        const bool legend = src.cls == ObjectClass::LegendLabel;
        const ObjectClass target = legend ? ObjectClass::LegendMarker : ObjectClass::PieSlice;
        const bool any = std::any_of(objects.begin(), objects.end(),
                                     [&](const ChartObject& c) { return c.cls == target; });
        if (!any) {
          warn(legend ? "legend_label_without_marker" : "pie_label_without_slice",
               std::string(class_name(src.cls)) + " " + std::to_string(src.id) +
                   " has no candidate to connect to",
               src.id);
          break;
        }
        const ObjectId nearest = nearest_object(src, objects, {target});
        edges.add(a, label_of.at(nearest),
                  legend ? EdgeRule::LegendLabelToMarker : EdgeRule::PieLabelToSlice);
        break;
      }
      case ObjectClass::Pie:
        for (std::size_t b = 0; b < n; ++b)
          if (objects[b].cls == ObjectClass::PieSlice) edges.add(a, b, EdgeRule::PieToSlice);
        break;
      default:
        break;
    }
  }
  g.edges = edges.sorted();
  return g;
}

std::vector<std::string> node_texts(const TextualGraph& g) {
  std::vector<std::string> texts;
  texts.reserve(g.nodes.size());
  for (const auto& n : g.nodes) texts.push_back(n.text);
  return texts;
}

// ---- embeddings -------------------------------------------------------------

std::size_t embedding_dim(const EmbeddingSource& source) noexcept {
  return std::visit([](const auto& s) { return s.dim; }, source);
}

std::vector<double> hashed_embedding(std::string_view text, std::size_t dim) {
  if (text.empty()) throw Error(ErrorCode::ZeroLengthText, "cannot embed an empty string");
  if (dim == 0) throw Error(ErrorCode::InvalidConfig, "embedding dim must be positive");
  std::string padded;
  padded.reserve(text.size() + 2);
  padded.push_back('\x02');
  padded.append(text);
  padded.push_back('\x03');

  std::vector<double> v(dim, 0.0);
  for (std::size_t k = 0; k + 3 <= padded.size(); ++k) {
    v[fnv1a64(std::string_view(padded).substr(k, 3)) % dim] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

Matrix embed_texts(std::span<const std::string> texts, const EmbeddingSource& source) {
  const std::size_t dim = embedding_dim(source);
  Matrix out(texts.size(), dim);
  for (std::size_t t = 0; t < texts.size(); ++t) {
    if (texts[t].empty()) throw Error(ErrorCode::ZeroLengthText, "text " + std::to_string(t) + " is empty");
    auto dst = out.row(t);
    if (const auto* hashed = std::get_if<HashedEmbedder>(&source)) {
      const auto v = hashed_embedding(texts[t], hashed->dim);
      std::copy(v.begin(), v.end(), dst.begin());
      continue;
    }
    const auto& table = std::get<ExternalEmbeddings>(source);
    auto it = table.entries.find(texts[t]);
    if (it == table.entries.end() || it->second.empty()) {
      throw Error(ErrorCode::MissingEmbedding, "no embedding for text '" + texts[t] + "'");
    }
    for (const auto& vec : it->second)
      for (std::size_t k = 0; k < dim; ++k) dst[k] += vec[k];
    const double count = static_cast<double>(it->second.size());
    for (double& x : dst) x /= count;
  }
  return out;
}

ExternalEmbeddings parse_embeddings(std::string_view bytes) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, e.what());
  }
  auto fail = [](const std::string& what) -> void { throw Error(ErrorCode::SchemaViolation, what); };
  if (!doc.is_object()) fail("embeddings: top level must be an object");
  if (!doc.contains("dim") || !doc["dim"].is_number_unsigned() || doc["dim"].get<std::size_t>() == 0) {
    fail("embeddings.dim must be a positive integer");
  }
  ExternalEmbeddings table;
  table.dim = doc["dim"].get<std::size_t>();
  const std::string pooling = doc.value("pooling", std::string("sentence"));
  if (pooling == "token") {
    table.pooling = EmbeddingPooling::Token;
  } else if (pooling == "sentence") {
    table.pooling = EmbeddingPooling::Sentence;
  } else {
    fail("embeddings.pooling must be 'token' or 'sentence'");
  }
  if (!doc.contains("entries") || !doc["entries"].is_object()) fail("embeddings.entries must be an object");

  auto read_vector = [&](const json& jv, const std::string& key) {
    if (!jv.is_array() || jv.size() != table.dim) {
      fail("embeddings.entries['" + key + "'] vector must have " + std::to_string(table.dim) + " numbers");
    }
    std::vector<double> v;
    for (const auto& x : jv) {
      if (!x.is_number()) fail("embeddings.entries['" + key + "'] contains a non-number");
      v.push_back(x.get<double>());
    }
    return v;
  };

  for (const auto& [key, value] : doc["entries"].items()) {
    std::vector<std::vector<double>> vectors;
    if (table.pooling == EmbeddingPooling::Sentence) {
      vectors.push_back(read_vector(value, key));
    } else {
      if (!value.is_array() || value.empty()) fail("embeddings.entries['" + key + "'] must list token vectors");
      for (const auto& tok : value) vectors.push_back(read_vector(tok, key));
    }
    table.entries.emplace(key, std::move(vectors));
  }
  return table;
}

std::string serialize_embeddings(const ExternalEmbeddings& table) {
  using nlohmann::json;
  json doc;
  doc["dim"] = table.dim;
  doc["pooling"] = table.pooling == EmbeddingPooling::Token ? "token" : "sentence";
  json entries = json::object();
  for (const auto& [key, vectors] : table.entries) {
    if (table.pooling == EmbeddingPooling::Sentence) {
      entries[key] = vectors.front();
    } else {
      entries[key] = vectors;
    }
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

Matrix LinearMap::apply(const Matrix& x) const {
  Matrix out = matmul(x, weight);
  add_row_broadcast(out, bias);
  return out;
}

Matrix init_textual_nodes(const TextualGraph& graph, const Matrix& embeddings, const LinearMap& projector) {
  if (embeddings.rows() != graph.node_count()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(embeddings.rows()) + " embedding rows for " +
                                              std::to_string(graph.node_count()) + " textual nodes");
  }
  if (embeddings.cols() != projector.in_dim() || projector.bias.size() != projector.out_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "projector shape does not match embedding dim " +
                                              std::to_string(embeddings.cols()));
  }
  return projector.apply(embeddings);
}

}  // namespace chartgraph
