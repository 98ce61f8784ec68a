#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "chartgraph/chart_model.hpp"

namespace chartgraph {

/// Uniform grid of image patches. Patch (r, c) covers
/// [c/cols, (c+1)/cols] x [r/rows, (r+1)/rows]; linear index r*cols + c.
struct PatchGrid {
  std::size_t rows = 1;
  std::size_t cols = 1;

  PatchGrid() = default;
  PatchGrid(std::size_t r, std::size_t c);

  std::size_t size() const noexcept { return rows * cols; }
  std::size_t index(std::size_t r, std::size_t c) const noexcept { return r * cols + c; }
  std::size_t row_of(std::size_t i) const noexcept { return i / cols; }
  std::size_t col_of(std::size_t i) const noexcept { return i % cols; }
  BBox cell(std::size_t i) const noexcept;

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

/// Euclidean distance between the closest points of two closed boxes.
/// Zero iff they intersect or touch.
double min_bbox_distance(const BBox& a, const BBox& b) noexcept;

/// True iff the x (resp. y) projections share a segment of positive length.
bool interval_overlap_x(const BBox& a, const BBox& b) noexcept;
bool interval_overlap_y(const BBox& a, const BBox& b) noexcept;

/// Patches whose cell intersects `bbox` with positive area, ascending.
/// A zero-area box maps to the single patch containing its center.
std::vector<std::size_t> patch_alignment(const BBox& bbox, const PatchGrid& grid);

/// Id of the candidate (restricted to `class_filter`) closest to `src`
/// by min_bbox_distance; ties go to the smaller id. Throws
/// Error(NoCandidate) if nothing passes the filter. `src` itself is
/// never a candidate.
ObjectId nearest_object(const ChartObject& src, std::span<const ChartObject> candidates,
                        std::initializer_list<ObjectClass> class_filter);

}  // namespace chartgraph
