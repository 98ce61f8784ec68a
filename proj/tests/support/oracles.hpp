#pragma once

// Straightforward re-implementations used as test oracles. None of these
// call into the library code they check.

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "chartgraph/chart_model.hpp"
#include "chartgraph/matrix.hpp"
#include "chartgraph/rng.hpp"

namespace cgtest {

using namespace chartgraph;

/// Minimum over sampled boundary-point pairs (upper bound on the true distance).
double sampled_boundary_distance(const BBox& a, const BBox& b, Rng& rng, std::size_t samples);
/// Minimum over all pairs of k evenly spaced perimeter points per box (k*k pairs).
double lattice_boundary_distance(const BBox& a, const BBox& b, std::size_t k);

/// Patches of a rows x cols grid that `box` covers with positive area, or
/// the patch holding its center when the box has zero area.
std::vector<std::size_t> brute_patch_set(const BBox& box, std::size_t rows, std::size_t cols);

/// Patch bias by brute force: for each patch, scan all objects, keep those whose
/// box covers the patch, average their rows (ascending id order).
Matrix brute_patch_bias(const Matrix& graph_repr, std::span<const ChartObject> objects, std::size_t rows,
                        std::size_t cols);

/// Edge (i, j, rule index 0..5) over textual node indices, i < j.
using OracleEdge = std::tuple<std::size_t, std::size_t, int>;

/// Textual-graph edges in Rules mode, derived pair by pair from the six
/// rules. Node layout: label nodes in object order, then OCR nodes for
/// non-shape objects carrying text, in object order.
std::set<OracleEdge> brute_rule_edges(std::span<const ChartObject> objects);

/// -sum_j log softmax(logits_j)[answer_j] in long double.
long double brute_nll(const Matrix& logits, std::span<const std::uint32_t> answer);

/// Plain triple-loop product.
Matrix naive_matmul(const Matrix& a, const Matrix& b);

/// D^-1/2 (A+I) D^-1/2 built from an explicit dense adjacency.
Matrix naive_normalized_adjacency(const Matrix& dense_adjacency);

}  // namespace cgtest
