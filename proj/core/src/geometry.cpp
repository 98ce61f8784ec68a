#include "chartgraph/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chartgraph/error.hpp"

namespace chartgraph {

namespace {

// Axis gap between [a0,a1] and [b0,b1]; zero when the intervals meet.
double axis_gap(double a0, double a1, double b0, double b1) noexcept {
  return std::max(0.0, std::max(a0, b0) - std::min(a1, b1));
}

bool positive_overlap(double a0, double a1, double b0, double b1) noexcept {
  return std::max(a0, b0) < std::min(a1, b1);
}

// Cells along one axis whose interval [k/n, (k+1)/n] overlaps [lo, hi]
// with positive length.
std::vector<std::size_t> axis_cells(double lo, double hi, std::size_t n) {
  std::vector<std::size_t> cells;
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double c0 = static_cast<double>(k) / dn;
    const double c1 = static_cast<double>(k + 1) / dn;
    if (positive_overlap(lo, hi, c0, c1)) cells.push_back(k);
  }
  return cells;
}

std::size_t containing_cell(double v, std::size_t n) {
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (v < static_cast<double>(k + 1) / dn) return k;
  }
  return n - 1;
}

}  // namespace

PatchGrid::PatchGrid(std::size_t r, std::size_t c) : rows(r), cols(c) {
  if (r == 0 || c == 0) throw Error(ErrorCode::InvalidConfig, "patch grid needs rows >= 1 and cols >= 1");
}

BBox PatchGrid::cell(std::size_t i) const noexcept {
  const double r = static_cast<double>(row_of(i));
  const double c = static_cast<double>(col_of(i));
  const double dr = static_cast<double>(rows);
  const double dc = static_cast<double>(cols);
  return {c / dc, r / dr, (c + 1.0) / dc, (r + 1.0) / dr};
}

double min_bbox_distance(const BBox& a, const BBox& b) noexcept {
  const double gx = axis_gap(a.x_min, a.x_max, b.x_min, b.x_max);
  const double gy = axis_gap(a.y_min, a.y_max, b.y_min, b.y_max);
  return std::hypot(gx, gy);
}

bool interval_overlap_x(const BBox& a, const BBox& b) noexcept {
  return positive_overlap(a.x_min, a.x_max, b.x_min, b.x_max);
}

bool interval_overlap_y(const BBox& a, const BBox& b) noexcept {
  return positive_overlap(a.y_min, a.y_max, b.y_min, b.y_max);
}

std::vector<std::size_t> patch_alignment(const BBox& bbox, const PatchGrid& grid) {
  std::vector<std::size_t> out;
  if (bbox.area() <= 0.0) {
    const std::size_t r = containing_cell(bbox.center_y(), grid.rows);
    const std::size_t c = containing_cell(bbox.center_x(), grid.cols);
    out.push_back(grid.index(r, c));
    return out;
  }
  const auto cols = axis_cells(bbox.x_min, bbox.x_max, grid.cols);
  const auto rows = axis_cells(bbox.y_min, bbox.y_max, grid.rows);
  out.reserve(cols.size() * rows.size());
  for (std::size_t r : rows)
    for (std::size_t c : cols) out.push_back(grid.index(r, c));
  return out;
}

ObjectId nearest_object(const ChartObject& src, std::span<const ChartObject> candidates,
                        std::initializer_list<ObjectClass> class_filter) {
  const ChartObject* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& cand : candidates) {
    if (cand.id == src.id) continue;
    if (std::find(class_filter.begin(), class_filter.end(), cand.cls) == class_filter.end()) continue;
    const double d = min_bbox_distance(src.bbox, cand.bbox);
    if (best == nullptr || d < best_d || (d == best_d && cand.id < best->id)) {
      best = &cand;
      best_d = d;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorCode::NoCandidate, "no candidate of the requested class for object " +
                                            std::to_string(src.id));
  }
  return best->id;
}

}  // namespace chartgraph
