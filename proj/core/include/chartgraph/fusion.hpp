#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "chartgraph/chart_model.hpp"
#include "chartgraph/geometry.hpp"
#include "chartgraph/matrix.hpp"

namespace chartgraph {

enum class BackboneMode : std::uint8_t {
  Patch,  // encoder emits one hidden state per image patch
  Roi,    // encoder emits one hidden state per detected region
};

/// Fixed number of region slots an ROI backbone consumes.
inline constexpr std::size_t kRoiSlots = 36;

/// For every encoder slot, the objects whose representation is pooled
/// into it. Object ids within a slot are kept in ascending order.
struct AlignmentIndex {
  BackboneMode mode = BackboneMode::Patch;
  std::vector<std::vector<ObjectId>> slots;

  std::size_t size() const noexcept { return slots.size(); }
};

/// Top-k objects by confidence (ties: smaller id), padded to kRoiSlots.
struct RoiSelection {
  std::vector<ObjectId> kept;
  std::array<bool, kRoiSlots> mask{};
};

/// Inverse of patch_alignment: slot i lists every object covering patch i.
AlignmentIndex build_patch_alignment(std::span<const ChartObject> objects, const PatchGrid& grid);
/// Slot i holds kept[i]; pad slots are empty.
AlignmentIndex build_roi_alignment(const RoiSelection& selection);

RoiSelection select_rois(std::span<const ChartObject> objects);
/// The kept objects in slot order.
std::vector<ChartObject> roi_objects(std::span<const ChartObject> objects, const RoiSelection& selection);

/// Row-wise [visual | textual]. Both inputs are indexed by object.
Matrix concat_object_representations(const Matrix& visual, const Matrix& textual_label_rows);

/// Row i is the mean of the graph-representation rows of the objects in
/// slot i (summed in ascending id order), or zero when the slot is empty.
/// row_ids[r] is the object id of row r of `graph_repr`. Throws
/// Error(UnknownObjectId) if a slot names an id with no row.
Matrix compute_bias(const Matrix& graph_repr, std::span<const ObjectId> row_ids, const AlignmentIndex& align);

/// Gradient of compute_bias with respect to graph_repr.
Matrix compute_bias_backward(const Matrix& dbias, std::span<const ObjectId> row_ids,
                             const AlignmentIndex& align);

/// Residual update encoder + bias.
Matrix fuse(const Matrix& encoder_states, const Matrix& bias);

}  // namespace chartgraph
