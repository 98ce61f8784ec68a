#pragma once

#include <string>
#include <string_view>

#include "chartgraph/textual_graph.hpp"
#include "chartgraph/visual_graph.hpp"

namespace chartgraph {

inline constexpr std::string_view kVisualGraphFormat = "chartgraph-visual-graph/1";
inline constexpr std::string_view kTextualGraphFormat = "chartgraph-textual-graph/1";

/// Nodes labeled "<id>:<class>", edge labels are weights to 4 decimals.
std::string visual_graph_to_dot(const WeightedGraph& g);
/// Label nodes drawn as boxes, OCR nodes as ellipses, edges labeled with
/// their rule name.
std::string textual_graph_to_dot(const TextualGraph& g);

std::string visual_graph_to_json(const WeightedGraph& g);
std::string textual_graph_to_json(const TextualGraph& g);

WeightedGraph parse_visual_graph_json(std::string_view bytes);
TextualGraph parse_textual_graph_json(std::string_view bytes);

}  // namespace chartgraph
