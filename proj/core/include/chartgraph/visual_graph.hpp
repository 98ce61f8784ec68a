#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chartgraph/chart_model.hpp"
#include "chartgraph/geometry.hpp"
#include "chartgraph/matrix.hpp"

namespace chartgraph {

struct WeightedEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 1.0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Undirected graph over chart objects. Self-loops are never stored;
/// the GCN adds them when it normalizes the adjacency.
struct WeightedGraph {
  std::vector<ObjectId> node_ids;  // object id per node index
  std::vector<ObjectClass> node_classes;
  std::vector<WeightedEdge> edges;

  std::size_t node_count() const noexcept { return node_ids.size(); }

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;
};

/// exp(-d). Throws Error(InvalidDistance) for negative or non-finite d.
double edge_coefficient(double d);

/// Complete graph over `objects` in input order with
/// weight(i, j) = exp(-distance_scale * min_bbox_distance(i, j)).
/// Throws Error(EmptyAnnotation) for an empty object list.
WeightedGraph build_visual_graph(std::span<const ChartObject> objects, double distance_scale = 1.0);

/// Row o is the mean of the encoder rows of the patches the object's box
/// covers. encoder_states must have grid.size() rows.
Matrix init_visual_nodes_patch(std::span<const ChartObject> objects, const PatchGrid& grid,
                               const Matrix& encoder_states);

/// One ROI row per object, aligned by index; a plain copy.
Matrix init_visual_nodes_roi(const Matrix& roi_features, std::span<const ChartObject> objects);

}  // namespace chartgraph
