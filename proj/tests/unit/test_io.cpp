#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "chartgraph/error.hpp"
#include "chartgraph/graph_export.hpp"
#include "chartgraph/synthetic.hpp"
#include "chartgraph/tensor_io.hpp"
#include "generators.hpp"

using namespace chartgraph;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST(TensorFile, RoundTripIsBitExact) {
  Rng rng(101);
  TensorFile f;
  f.meta = {{"seed", "7"}, {"kind", "test"}};
  f.tensors.push_back({"a", cgtest::random_matrix(rng, 3, 5, -1e6, 1e6)});
  f.tensors.push_back({"empty", Matrix(0, 4)});
  Matrix odd(2, 2);
  odd(0, 0) = -0.0;
  odd(0, 1) = std::numeric_limits<double>::denorm_min();
  odd(1, 0) = std::numeric_limits<double>::max();
  odd(1, 1) = 0.1;
  f.tensors.push_back({"odd", odd});
  const std::string bytes = encode_tensor_file(f);
  EXPECT_EQ(bytes.substr(0, 8), kTensorMagic);
  const TensorFile back = decode_tensor_file(bytes);
  EXPECT_EQ(back, f);
  EXPECT_TRUE(std::signbit(back.at("odd")(0, 0)));
  EXPECT_EQ(encode_tensor_file(back), bytes);
  EXPECT_EQ(code_of([&] { back.at("missing"); }), ErrorCode::SchemaViolation);
}

TEST(TensorFile, RejectsCorruptInput) {
  TensorFile f;
  f.tensors.push_back({"w", Matrix{{1, 2}, {3, 4}}});
  const std::string bytes = encode_tensor_file(f);
  EXPECT_EQ(code_of([] { decode_tensor_file(""); }), ErrorCode::MalformedInput);
  EXPECT_EQ(code_of([&] { decode_tensor_file("XXXXXXXX" + bytes.substr(8)); }), ErrorCode::MalformedInput);
  EXPECT_EQ(code_of([&] { decode_tensor_file(bytes.substr(0, bytes.size() - 1)); }), ErrorCode::MalformedInput);
  EXPECT_EQ(code_of([&] { decode_tensor_file(bytes + "x"); }), ErrorCode::MalformedInput);
  std::string huge = bytes;
  huge[8] = '\xff';
  EXPECT_EQ(code_of([&] { decode_tensor_file(huge); }), ErrorCode::MalformedInput);
}

TEST(TensorFile, FileHelpers) {
  const auto path = std::filesystem::temp_directory_path() / "chartgraph_io_test.cgt";
  TensorFile f;
  f.tensors.push_back({"w", Matrix{{1.5}}});
  write_tensor_file(path, f);
  EXPECT_EQ(read_tensor_file(path), f);
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([&] { read_tensor_file(path); }), ErrorCode::Io);
  EXPECT_EQ(code_of([] { write_file("/nonexistent-dir/x/y", "z"); }), ErrorCode::Io);
}

TEST(GraphExport, JsonRoundTrip) {
  Rng rng(102);
  for (int trial = 0; trial < 50; ++trial) {
    const auto objs = cgtest::random_objects(rng, static_cast<std::size_t>(rng.between(1, 15)));
    const auto v = build_visual_graph(objs);
    const auto t = build_textual_graph(objs, trial % 2 ? TextualEdgeMode::Rules : TextualEdgeMode::FullyConnected);
    const std::string vj = visual_graph_to_json(v);
    const std::string tj = textual_graph_to_json(t);
    EXPECT_NE(vj.find(kVisualGraphFormat), std::string::npos);
    EXPECT_NE(tj.find(kTextualGraphFormat), std::string::npos);
    EXPECT_EQ(parse_visual_graph_json(vj), v);
    EXPECT_EQ(parse_textual_graph_json(tj), t);
  }
  EXPECT_THROW(parse_visual_graph_json("{}"), Error);
  EXPECT_THROW(parse_textual_graph_json("not json"), Error);
}

TEST(GraphExport, Dot) {
  Rng rng(103);
  const auto pie = generate_synthetic_chart(rng, {ChartType::Pie, 3});
  const auto t = build_textual_graph(pie.annotation.objects, TextualEdgeMode::Rules);
  const std::string tdot = textual_graph_to_dot(t);
  EXPECT_EQ(tdot.rfind("graph", 0), 0u);
  EXPECT_NE(tdot.find("PieToSlice"), std::string::npos);
  EXPECT_NE(tdot.find("OcrToLabel"), std::string::npos);
  EXPECT_NE(tdot.find("shape=box"), std::string::npos);
  EXPECT_NE(tdot.find("shape=ellipse"), std::string::npos);

  const std::vector<ChartObject> objs = {{3, ObjectClass::Bar, {0, 0, .2, .2}, 1.0, std::nullopt},
                                         {5, ObjectClass::Line, {.2, 0, .4, .2}, 1.0, std::nullopt}};
  const std::string vdot = visual_graph_to_dot(build_visual_graph(objs));
  EXPECT_NE(vdot.find("3:bar"), std::string::npos);
  EXPECT_NE(vdot.find("5:line"), std::string::npos);
  EXPECT_NE(vdot.find("1.0000"), std::string::npos);
}
