#include "chartgraph/chart_model.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "chartgraph/error.hpp"

namespace chartgraph {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kObjectClassCount> kClassNames = {
    "chart_title",   "x_axis_title", "y_axis_title", "x_axis_label", "y_axis_label",
    "legend_label",  "legend_marker", "bar",         "line",         "dot_line",
    "pie",           "pie_slice",    "pie_label",
};

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::SchemaViolation, what); }

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema(where + "." + key + " is missing");
  return *it;
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) schema(where + "." + key + " must be a number");
  return v.get<double>();
}

std::string object_where(std::size_t index) { return "objects[" + std::to_string(index) + "]"; }

void check_object(const ChartObject& o, const std::string& where) {
  const BBox& b = o.bbox;
  for (double v : {b.x_min, b.y_min, b.x_max, b.y_max}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) schema(where + ".bbox coordinate outside [0,1]");
  }
  if (b.x_min > b.x_max) schema(where + ".bbox has x_min > x_max");
  if (b.y_min > b.y_max) schema(where + ".bbox has y_min > y_max");
  if (!std::isfinite(o.confidence) || o.confidence < 0.0 || o.confidence > 1.0) {
    schema(where + ".confidence outside [0,1]");
  }
}

}  // namespace

bool BBox::valid() const noexcept {
  for (double v : {x_min, y_min, x_max, y_max})
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  return x_min <= x_max && y_min <= y_max;
}

std::string_view class_name(ObjectClass c) noexcept { return kClassNames[static_cast<std::size_t>(c)]; }

std::optional<ObjectClass> parse_class_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kClassNames.size(); ++i)
    if (kClassNames[i] == name) return static_cast<ObjectClass>(i);
  return std::nullopt;
}

void validate_structure(const ChartAnnotation& a) {
  if (a.objects.empty()) schema("objects must be non-empty");
  std::unordered_set<ObjectId> seen;
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    const auto& o = a.objects[i];
    check_object(o, object_where(i));
    if (!seen.insert(o.id).second) {
      schema(object_where(i) + ".id " + std::to_string(o.id) + " violates id uniqueness");
    }
  }
}

ChartAnnotation parse_annotation(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, e.what());
  }
  if (!doc.is_object()) schema("top level must be an object");

  ChartAnnotation a;
  const json& cid = require(doc, "chart_id", "annotation");
  if (!cid.is_string()) schema("annotation.chart_id must be a string");
  a.chart_id = cid.get<std::string>();

  const json& size = require(doc, "image_size", "annotation");
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    schema("annotation.image_size must be [width, height] integers");
  }
  a.image_size = {size[0].get<int>(), size[1].get<int>()};
  if (a.image_size[0] < 0 || a.image_size[1] < 0) schema("annotation.image_size must be non-negative");

  const json& objects = require(doc, "objects", "annotation");
  if (!objects.is_array()) schema("annotation.objects must be an array");

  for (std::size_t i = 0; i < objects.size(); ++i) {
    const json& jo = objects[i];
    const std::string where = object_where(i);
    if (!jo.is_object()) schema(where + " must be an object");

    ChartObject o;
    const json& id = require(jo, "id", where);
    if (!id.is_number_integer()) schema(where + ".id must be an integer");
    o.id = id.get<ObjectId>();

    const json& cls = require(jo, "class", where);
    if (!cls.is_string()) schema(where + ".class must be a string");
    auto parsed = parse_class_name(cls.get<std::string>());
    if (!parsed) schema(where + ".class unknown class '" + cls.get<std::string>() + "'");
    o.cls = *parsed;

    const json& bbox = require(jo, "bbox", where);
    if (!bbox.is_array() || bbox.size() != 4) schema(where + ".bbox must be [x_min,y_min,x_max,y_max]");
    for (const auto& v : bbox)
      if (!v.is_number()) schema(where + ".bbox entries must be numbers");
    o.bbox = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
              bbox[3].get<double>()};

    o.confidence = require_number(jo, "confidence", where);

    if (auto it = jo.find("ocr_text"); it != jo.end() && !it->is_null()) {
      if (!it->is_string()) schema(where + ".ocr_text must be a string");
      o.ocr_text = it->get<std::string>();
    }
    a.objects.push_back(std::move(o));
  }

  validate_structure(a);
  return a;
}

std::string serialize_annotation(const ChartAnnotation& a) {
  json doc;
  doc["chart_id"] = a.chart_id;
  doc["image_size"] = {a.image_size[0], a.image_size[1]};
  json objects = json::array();
  for (const auto& o : a.objects) {
    json jo;
    jo["id"] = o.id;
    jo["class"] = std::string(class_name(o.cls));
    jo["bbox"] = {o.bbox.x_min, o.bbox.y_min, o.bbox.x_max, o.bbox.y_max};
    jo["confidence"] = o.confidence;
    if (o.ocr_text) jo["ocr_text"] = *o.ocr_text;
    objects.push_back(std::move(jo));
  }
  doc["objects"] = std::move(objects);
  return doc.dump(2) + "\n";
}

std::vector<Warning> validate_semantics(const ChartAnnotation& a) {
  std::vector<Warning> warnings;
  auto count = [&](ObjectClass c) {
    return std::count_if(a.objects.begin(), a.objects.end(), [c](const auto& o) { return o.cls == c; });
  };
  const bool has_marker = count(ObjectClass::LegendMarker) > 0;
  const bool has_pie = count(ObjectClass::Pie) > 0;

  for (const auto& o : a.objects) {
    if (is_shape(o.cls) && o.ocr_text) {
      warnings.push_back({"shape_with_ocr",
                          std::string(class_name(o.cls)) + " object " + std::to_string(o.id) +
                              " carries ocr_text; it will be ignored",
                          o.id});
    }
    if (o.cls == ObjectClass::LegendLabel && !has_marker) {
      warnings.push_back({"legend_label_without_marker",
                          "legend label " + std::to_string(o.id) + " has no legend marker to attach to",
                          o.id});
    }
    if (o.cls == ObjectClass::PieSlice && !has_pie) {
      warnings.push_back({"pie_slice_without_pie",
                          "pie slice " + std::to_string(o.id) + " present but no pie object", o.id});
    }
  }
  return warnings;
}

}  // namespace chartgraph
