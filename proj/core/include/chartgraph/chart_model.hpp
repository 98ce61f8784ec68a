#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartgraph {

using ObjectId = std::int64_t;

/// Axis-aligned box in normalized image coordinates, origin top-left.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x_min + x_max); }
  double center_y() const noexcept { return 0.5 * (y_min + y_max); }
  /// Ordered corners and every coordinate in [0, 1].
  bool valid() const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class ObjectClass : std::uint8_t {
  ChartTitle,
  XAxisTitle,
  YAxisTitle,
  XAxisLabel,
  YAxisLabel,
  LegendLabel,
  LegendMarker,
  Bar,
  Line,
  DotLine,
  Pie,
  PieSlice,
  PieLabel,
};

inline constexpr std::size_t kObjectClassCount = 13;
inline constexpr std::array<ObjectClass, kObjectClassCount> kAllObjectClasses = {
    ObjectClass::ChartTitle,  ObjectClass::XAxisTitle,   ObjectClass::YAxisTitle,
    ObjectClass::XAxisLabel,  ObjectClass::YAxisLabel,   ObjectClass::LegendLabel,
    ObjectClass::LegendMarker, ObjectClass::Bar,         ObjectClass::Line,
    ObjectClass::DotLine,     ObjectClass::Pie,          ObjectClass::PieSlice,
    ObjectClass::PieLabel,
};

/// Drawn marks (no readable text). Everything else carries OCR text.
constexpr bool is_shape(ObjectClass c) noexcept {
  switch (c) {
    case ObjectClass::Bar:
    case ObjectClass::Line:
    case ObjectClass::DotLine:
    case ObjectClass::Pie:
    case ObjectClass::PieSlice:
    case ObjectClass::LegendMarker:
      return true;
    default:
      return false;
  }
}

/// snake_case name used in files, e.g. "x_axis_label".
std::string_view class_name(ObjectClass c) noexcept;
std::optional<ObjectClass> parse_class_name(std::string_view name) noexcept;

struct ChartObject {
  ObjectId id = 0;
  ObjectClass cls = ObjectClass::Bar;
  BBox bbox;
  double confidence = 1.0;
  std::optional<std::string> ocr_text;

  friend bool operator==(const ChartObject&, const ChartObject&) = default;
};

struct ChartAnnotation {
  std::string chart_id;
  std::array<int, 2> image_size{0, 0};  // width, height in px; informational
  std::vector<ChartObject> objects;

  friend bool operator==(const ChartAnnotation&, const ChartAnnotation&) = default;
};

struct Warning {
  std::string code;
  std::string message;
  std::optional<ObjectId> object_id;

  friend bool operator==(const Warning&, const Warning&) = default;
};

/// Parses and validates the JSON annotation format. Throws
/// Error(MalformedInput) for syntax errors and Error(SchemaViolation)
/// naming the offending field for structural problems.
ChartAnnotation parse_annotation(std::string_view bytes);

/// Canonical JSON. parse_annotation(serialize_annotation(a)) == a.
std::string serialize_annotation(const ChartAnnotation& a);

/// Re-checks the structural invariants enforced by the parser; used for
/// annotations assembled in code.
void validate_structure(const ChartAnnotation& a);

/// Non-fatal semantic oddities: OCR text on a shape, legend labels with
/// no marker, pie slices with no pie.
std::vector<Warning> validate_semantics(const ChartAnnotation& a);

}  // namespace chartgraph
