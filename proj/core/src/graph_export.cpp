#include "chartgraph/graph_export.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>

#include "chartgraph/error.hpp"

namespace chartgraph {

using nlohmann::json;

namespace {

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

json parse_doc(std::string_view bytes, std::string_view format) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != format) {
    throw Error(ErrorCode::SchemaViolation, "expected format " + std::string(format));
  }
  return doc;
}

ObjectClass class_from_json(const json& v) {
  auto c = parse_class_name(v.get<std::string>());
  if (!c) throw Error(ErrorCode::SchemaViolation, "unknown class '" + v.get<std::string>() + "'");
  return *c;
}

EdgeRule rule_from_name(const std::string& name) {
  for (int r = 0; r <= static_cast<int>(EdgeRule::FullyConnected); ++r) {
    if (rule_name(static_cast<EdgeRule>(r)) == name) return static_cast<EdgeRule>(r);
  }
  throw Error(ErrorCode::SchemaViolation, "unknown edge rule '" + name + "'");
}

}  // namespace

std::string visual_graph_to_dot(const WeightedGraph& g) {
  std::string out = "graph visual {\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    out += "  n" + std::to_string(i) + " [label=\"" + std::to_string(g.node_ids[i]) + ":" +
           std::string(class_name(g.node_classes[i])) + "\"];\n";
  }
  for (const auto& e : g.edges) {
    out += "  n" + std::to_string(e.i) + " -- n" + std::to_string(e.j) + " [label=\"" + fixed4(e.weight) + "\"];\n";
  }
  out += "}\n";
  return out;
}

std::string textual_graph_to_dot(const TextualGraph& g) {
  std::string out = "graph textual {\n";
  for (const auto& n : g.nodes) {
    const bool label = n.kind == NodeKind::Label;
    out += "  t" + std::to_string(n.index) + " [shape=" + (label ? "box" : "ellipse") + ", label=\"" +
           std::to_string(n.object_id) + ":" + dot_escape(n.text) + "\"];\n";
  }
  for (const auto& e : g.edges) {
    out += "  t" + std::to_string(e.i) + " -- t" + std::to_string(e.j) + " [label=\"" +
           std::string(rule_name(e.rule)) + "\"];\n";
  }
  out += "}\n";
  return out;
}

std::string visual_graph_to_json(const WeightedGraph& g) {
  json doc;
  doc["format"] = kVisualGraphFormat;
  doc["n"] = g.node_count();
  doc["node_ids"] = g.node_ids;
  json classes = json::array();
  for (auto c : g.node_classes) classes.push_back(std::string(class_name(c)));
  doc["node_classes"] = std::move(classes);
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.i, e.j, e.weight});
  doc["edges"] = std::move(edges);
  return doc.dump(1) + "\n";
}

std::string textual_graph_to_json(const TextualGraph& g) {
  json doc;
  doc["format"] = kTextualGraphFormat;
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"index", n.index},
                     {"kind", n.kind == NodeKind::Label ? "label" : "ocr"},
                     {"object_id", n.object_id},
                     {"text", n.text}});
  }
  doc["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.i, e.j, std::string(rule_name(e.rule))});
  doc["edges"] = std::move(edges);
  return doc.dump(1) + "\n";
}

WeightedGraph parse_visual_graph_json(std::string_view bytes) {
  const json doc = parse_doc(bytes, kVisualGraphFormat);
  WeightedGraph g;
  try {
    g.node_ids = doc.at("node_ids").get<std::vector<ObjectId>>();
    for (const auto& c : doc.at("node_classes")) g.node_classes.push_back(class_from_json(c));
    for (const auto& e : doc.at("edges")) {
      g.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, e.what());
  }
  if (g.node_classes.size() != g.node_ids.size() || doc.value("n", std::size_t{0}) != g.node_ids.size()) {
    throw Error(ErrorCode::SchemaViolation, "visual graph node arrays disagree with n");
  }
  return g;
}

TextualGraph parse_textual_graph_json(std::string_view bytes) {
  const json doc = parse_doc(bytes, kTextualGraphFormat);
  TextualGraph g;
  try {
    for (const auto& n : doc.at("nodes")) {
      const std::string kind = n.at("kind").get<std::string>();
      if (kind != "label" && kind != "ocr") throw Error(ErrorCode::SchemaViolation, "unknown node kind " + kind);
      g.nodes.push_back({n.at("index").get<std::size_t>(), kind == "label" ? NodeKind::Label : NodeKind::Ocr,
                         n.at("object_id").get<ObjectId>(), n.at("text").get<std::string>()});
    }
    for (const auto& e : doc.at("edges")) {
      g.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(),
                         rule_from_name(e.at(2).get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, e.what());
  }
  return g;
}

}  // namespace chartgraph
