#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chartgraph/chart_model.hpp"
#include "chartgraph/fusion.hpp"
#include "chartgraph/geometry.hpp"
#include "chartgraph/matrix.hpp"
#include "chartgraph/rng.hpp"

namespace chartgraph {

using TokenId = std::uint32_t;

/// Closed answer/question vocabulary shared by every synthetic dataset:
/// special tokens, question words, category and series names, value
/// strings 0..100 in steps of 10, and the object class words.
class Vocabulary {
 public:
  static const Vocabulary& standard();

  std::size_t size() const noexcept { return tokens_.size(); }
  std::string_view token(TokenId id) const;
  /// Throws Error(IndexOutOfVocab) for unknown words.
  TokenId id(std::string_view word) const;
  bool contains(std::string_view word) const noexcept;

  TokenId bos() const noexcept { return 1; }
  TokenId eos() const noexcept { return 2; }

  /// Space-joined words up to (excluding) the first EOS.
  std::string detokenize(const std::vector<TokenId>& ids) const;

 private:
  Vocabulary();
  std::vector<std::string> tokens_;
};

enum class ChartType : std::uint8_t { Bar, Line, Pie };

std::string_view to_string(ChartType t) noexcept;

struct ChartSpec {
  ChartType type = ChartType::Bar;
  std::size_t n_elements = 3;  // bars, line series or pie slices
};

struct ChartSample {
  ChartAnnotation annotation;
  Matrix encoder_states;  // pseudo-encoder output for the configured backbone
  std::vector<TokenId> question_tokens;
  std::vector<TokenId> answer_tokens;  // ends with EOS
  std::string answer_text;             // gold string for relaxed accuracy

  friend bool operator==(const ChartSample&, const ChartSample&) = default;
};

/// Annotation plus one extractive question. Layout: title on top, axis
/// titles and labels along the plot edges, shapes in the plot area, a
/// legend on the right for line charts, pie slices around the center.
/// Encoder states are left empty; see PseudoEncoder.
ChartSample generate_synthetic_chart(Rng& rng, const ChartSpec& spec);

/// Stand-in for a pretrained image encoder. Patch mode: each patch row
/// is a fixed seeded projection of the patch's per-class area-occupancy
/// histogram. ROI mode: each kept region row projects the object's class
/// one-hot and box coordinates; pad slots are zero.
class PseudoEncoder {
 public:
  PseudoEncoder(std::uint64_t seed, std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }

  Matrix encode_patches(const ChartAnnotation& a, const PatchGrid& grid) const;
  Matrix encode_rois(const ChartAnnotation& a) const;

  /// Per-patch class occupancy (grid.size() x kObjectClassCount).
  static Matrix occupancy(const ChartAnnotation& a, const PatchGrid& grid);

 private:
  std::size_t dim_;
  Matrix patch_projection_;  // classes x dim
  Matrix roi_projection_;    // (classes + 4) x dim
};

}  // namespace chartgraph
