#include "chartgraph/fusion.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

#include "chartgraph/error.hpp"

namespace chartgraph {

namespace {

std::unordered_map<ObjectId, std::size_t> row_lookup(std::span<const ObjectId> row_ids) {
  std::unordered_map<ObjectId, std::size_t> rows;
  rows.reserve(row_ids.size());
  for (std::size_t r = 0; r < row_ids.size(); ++r) rows.emplace(row_ids[r], r);
  return rows;
}

std::size_t row_for(const std::unordered_map<ObjectId, std::size_t>& rows, ObjectId id) {
  auto it = rows.find(id);
  if (it == rows.end()) throw Error(ErrorCode::UnknownObjectId, "object id " + std::to_string(id) + " has no row");
  return it->second;
}

std::vector<ObjectId> sorted_slot(const std::vector<ObjectId>& slot) {
  std::vector<ObjectId> ids = slot;
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

AlignmentIndex build_patch_alignment(std::span<const ChartObject> objects, const PatchGrid& grid) {
  AlignmentIndex index;
  index.mode = BackboneMode::Patch;
  index.slots.resize(grid.size());
  for (const auto& o : objects) {
    for (std::size_t p : patch_alignment(o.bbox, grid)) index.slots[p].push_back(o.id);
  }
  for (auto& slot : index.slots) std::sort(slot.begin(), slot.end());
  return index;
}

AlignmentIndex build_roi_alignment(const RoiSelection& selection) {
  AlignmentIndex index;
  index.mode = BackboneMode::Roi;
  index.slots.resize(kRoiSlots);
  for (std::size_t i = 0; i < selection.kept.size(); ++i) index.slots[i].push_back(selection.kept[i]);
  return index;
}

RoiSelection select_rois(std::span<const ChartObject> objects) {
  std::vector<std::size_t> order(objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (objects[a].confidence != objects[b].confidence) return objects[a].confidence > objects[b].confidence;
    return objects[a].id < objects[b].id;
  });
  RoiSelection sel;
  const std::size_t keep = std::min(kRoiSlots, objects.size());
  for (std::size_t k = 0; k < keep; ++k) {
    sel.kept.push_back(objects[order[k]].id);
    sel.mask[k] = true;
  }
  return sel;
}

std::vector<ChartObject> roi_objects(std::span<const ChartObject> objects, const RoiSelection& selection) {
  std::vector<ChartObject> out;
  out.reserve(selection.kept.size());
  for (ObjectId id : selection.kept) {
    auto it = std::find_if(objects.begin(), objects.end(), [id](const ChartObject& o) { return o.id == id; });
    if (it == objects.end()) throw Error(ErrorCode::UnknownObjectId, "selected id " + std::to_string(id) + " not found");
    out.push_back(*it);
  }
  return out;
}

Matrix concat_object_representations(const Matrix& visual, const Matrix& textual_label_rows) {
  if (visual.rows() != textual_label_rows.rows()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(visual.rows()) + " visual rows vs " +
                                              std::to_string(textual_label_rows.rows()) + " textual rows");
  }
  return hconcat(visual, textual_label_rows);
}

Matrix compute_bias(const Matrix& graph_repr, std::span<const ObjectId> row_ids, const AlignmentIndex& align) {
  if (row_ids.size() != graph_repr.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "row id list does not match graph representation rows");
  }
  const auto rows = row_lookup(row_ids);
  const std::size_t dim = graph_repr.cols();
  Matrix bias(align.size(), dim);
  for (std::size_t i = 0; i < align.size(); ++i) {
    if (align.slots[i].empty()) continue;
    auto dst = bias.row(i);
    const auto ids = sorted_slot(align.slots[i]);
    for (ObjectId id : ids) {
      auto src = graph_repr.row(row_for(rows, id));
      for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k];
    }
    const double count = static_cast<double>(ids.size());
    for (double& v : dst) v /= count;
  }
  return bias;
}

Matrix compute_bias_backward(const Matrix& dbias, std::span<const ObjectId> row_ids,
                             const AlignmentIndex& align) {
  if (dbias.rows() != align.size()) {
    throw Error(ErrorCode::ShapeMismatch, "bias gradient rows do not match alignment slots");
  }
  const auto rows = row_lookup(row_ids);
  Matrix grad(row_ids.size(), dbias.cols());
  for (std::size_t i = 0; i < align.size(); ++i) {
    const auto& slot = align.slots[i];
    if (slot.empty()) continue;
    const double count = static_cast<double>(slot.size());
    auto src = dbias.row(i);
    for (ObjectId id : slot) {
      auto dst = grad.row(row_for(rows, id));
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k] / count;
    }
  }
  return grad;
}

Matrix fuse(const Matrix& encoder_states, const Matrix& bias) { return encoder_states + bias; }

}  // namespace chartgraph
