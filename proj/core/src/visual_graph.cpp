#include "chartgraph/visual_graph.hpp"

#include <cmath>
#include <string>

#include "chartgraph/error.hpp"

namespace chartgraph {

double edge_coefficient(double d) {
  if (!std::isfinite(d) || d < 0.0) {
    throw Error(ErrorCode::InvalidDistance, "edge distance must be finite and >= 0, got " + std::to_string(d));
  }
  return std::exp(-d);
}

WeightedGraph build_visual_graph(std::span<const ChartObject> objects, double distance_scale) {
  if (objects.empty()) throw Error(ErrorCode::EmptyAnnotation, "visual graph needs at least one object");
  if (!std::isfinite(distance_scale) || distance_scale < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "distance scale must be finite and >= 0");
  }
  WeightedGraph g;
  const std::size_t n = objects.size();
  g.node_ids.reserve(n);
  g.node_classes.reserve(n);
  for (const auto& o : objects) {
    g.node_ids.push_back(o.id);
    g.node_classes.push_back(o.cls);
  }
  g.edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = min_bbox_distance(objects[i].bbox, objects[j].bbox);
      g.edges.push_back({i, j, edge_coefficient(distance_scale * d)});
    }
  }
  return g;
}

Matrix init_visual_nodes_patch(std::span<const ChartObject> objects, const PatchGrid& grid,
                               const Matrix& encoder_states) {
  if (encoder_states.rows() != grid.size()) {
    throw Error(ErrorCode::ShapeMismatch, "encoder states have " + std::to_string(encoder_states.rows()) +
                                              " rows but the grid has " + std::to_string(grid.size()) +
                                              " patches");
  }
  if (!encoder_states.all_finite()) throw Error(ErrorCode::NonFiniteInput, "encoder states contain non-finite values");

  const std::size_t dim = encoder_states.cols();
  Matrix out(objects.size(), dim);
  for (std::size_t o = 0; o < objects.size(); ++o) {
    const auto patches = patch_alignment(objects[o].bbox, grid);
    auto dst = out.row(o);
    for (std::size_t p : patches) {
      auto src = encoder_states.row(p);
      for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k];
    }
    const double count = static_cast<double>(patches.size());
    for (double& v : dst) v /= count;
  }
  return out;
}

Matrix init_visual_nodes_roi(const Matrix& roi_features, std::span<const ChartObject> objects) {
  if (roi_features.rows() != objects.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(roi_features.rows()) + " ROI rows for " +
                                              std::to_string(objects.size()) + " objects");
  }
  return roi_features;
}

}  // namespace chartgraph
