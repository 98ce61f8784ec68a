#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chartgraph/chart_model.hpp"
#include "chartgraph/matrix.hpp"

namespace chartgraph {

enum class NodeKind : std::uint8_t { Label, Ocr };

struct TextualNode {
  std::size_t index = 0;
  NodeKind kind = NodeKind::Label;
  ObjectId object_id = 0;
  std::string text;  // class name for Label nodes, OCR string for Ocr nodes

  friend bool operator==(const TextualNode&, const TextualNode&) = default;
};

/// Which semantic rule produced an edge. Declaration order is rule
/// priority: a pair derivable from several rules keeps the first.
enum class EdgeRule : std::uint8_t {
  AxisTitleToLabel,     // x/y axis title -- every x/y axis label
  AxisLabelToShape,     // axis label -- bar/line/dot line overlapping on that axis
  LegendLabelToMarker,  // legend label -- nearest legend marker
  PieToSlice,           // pie -- every slice
  PieLabelToSlice,      // pie label -- nearest slice
  OcrToLabel,           // OCR node -- its object's label node
  FullyConnected,       // ablation: every label pair
};

std::string_view rule_name(EdgeRule r) noexcept;

struct RuleEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  EdgeRule rule = EdgeRule::FullyConnected;

  friend bool operator==(const RuleEdge&, const RuleEdge&) = default;
};

enum class TextualEdgeMode : std::uint8_t { Rules, FullyConnected };

/// Label nodes first (one per object, input order), then OCR nodes
/// (input order of their objects). Edges sorted by (i, j).
struct TextualGraph {
  std::vector<TextualNode> nodes;
  std::vector<RuleEdge> edges;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::optional<std::size_t> label_node_of(ObjectId id) const noexcept;

  friend bool operator==(const TextualGraph&, const TextualGraph&) = default;
};

/// Throws Error(EmptyAnnotation) for an empty object list. Rules whose
/// nearest-candidate set is empty (legend label without markers, pie
/// label without slices) are skipped and reported through `warnings`.
/// OCR text on shape objects is ignored.
TextualGraph build_textual_graph(std::span<const ChartObject> objects, TextualEdgeMode mode,
                                 std::vector<Warning>* warnings = nullptr);

std::vector<std::string> node_texts(const TextualGraph& g);

// ---- text embeddings -------------------------------------------------------

/// Deterministic stand-in for a sentence encoder: character 3-grams of
/// the text padded with boundary bytes, hashed (FNV-1a) into `dim`
/// buckets, counts scaled to unit L2 norm.
struct HashedEmbedder {
  std::size_t dim = 64;
};

enum class EmbeddingPooling : std::uint8_t { Token, Sentence };

/// Lookup table loaded from an embeddings file. Token pooling stores
/// several vectors per text and averages them; sentence pooling stores
/// exactly one.
struct ExternalEmbeddings {
  std::size_t dim = 0;
  EmbeddingPooling pooling = EmbeddingPooling::Sentence;
  std::map<std::string, std::vector<std::vector<double>>, std::less<>> entries;
};

using EmbeddingSource = std::variant<HashedEmbedder, ExternalEmbeddings>;

std::size_t embedding_dim(const EmbeddingSource& source) noexcept;

std::vector<double> hashed_embedding(std::string_view text, std::size_t dim);

/// Row t embeds texts[t]. Throws Error(ZeroLengthText) for an empty
/// string and Error(MissingEmbedding) for an unknown text in External mode.
Matrix embed_texts(std::span<const std::string> texts, const EmbeddingSource& source);

ExternalEmbeddings parse_embeddings(std::string_view bytes);
std::string serialize_embeddings(const ExternalEmbeddings& table);

/// Affine map x -> x * weight + bias (weight is in_dim x out_dim).
struct LinearMap {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }
  Matrix apply(const Matrix& x) const;
};

/// Projects one embedding row per node into the visual feature space.
Matrix init_textual_nodes(const TextualGraph& graph, const Matrix& embeddings, const LinearMap& projector);

}  // namespace chartgraph
