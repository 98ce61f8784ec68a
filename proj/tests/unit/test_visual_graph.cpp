#include <gtest/gtest.h>

#include <cmath>

#include "chartgraph/error.hpp"
#include "chartgraph/visual_graph.hpp"
#include "generators.hpp"

using namespace chartgraph;

namespace {
ChartObject at(ObjectId id, BBox b, ObjectClass cls = ObjectClass::Bar) { return {id, cls, b, 1.0, std::nullopt}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}
}  // namespace

TEST(EdgeCoefficient, Examples) {
  EXPECT_EQ(edge_coefficient(0.0), 1.0);
  EXPECT_NEAR(edge_coefficient(1.0), 0.36787944117144233, 1e-16);
  EXPECT_NEAR(edge_coefficient(0.3), 0.74081822068171788, 1e-16);
}

TEST(EdgeCoefficient, RejectsBadDistances) {
  EXPECT_EQ(code_of([] { edge_coefficient(-1e-9); }), ErrorCode::InvalidDistance);
  EXPECT_EQ(code_of([] { edge_coefficient(std::nan("")); }), ErrorCode::InvalidDistance);
  EXPECT_EQ(code_of([] { edge_coefficient(INFINITY); }), ErrorCode::InvalidDistance);
}

TEST(BuildVisualGraph, Examples) {
  std::vector<ChartObject> one = {at(4, {.1, .1, .2, .2})};
  const auto g1 = build_visual_graph(one);
  EXPECT_EQ(g1.node_count(), 1u);
  EXPECT_TRUE(g1.edges.empty());

  std::vector<ChartObject> three = {at(0, {0, 0, .1, .1}), at(1, {.5, .5, .6, .6}), at(2, {.9, 0, 1, .1})};
  const auto g3 = build_visual_graph(three);
  ASSERT_EQ(g3.edges.size(), 3u);
  for (const auto& e : g3.edges) {
    EXPECT_GT(e.weight, 0.0);
    EXPECT_LE(e.weight, 1.0);
    EXPECT_LT(e.i, e.j);
  }

  std::vector<ChartObject> touching = {at(0, {0, 0, .2, .2}), at(1, {.2, 0, .4, .2})};
  const auto gt = build_visual_graph(touching);
  ASSERT_EQ(gt.edges.size(), 1u);
  EXPECT_EQ(gt.edges[0].weight, 1.0);
}

TEST(BuildVisualGraph, EmptyAndScale) {
  EXPECT_EQ(code_of([] { build_visual_graph(std::vector<ChartObject>{}); }), ErrorCode::EmptyAnnotation);
  std::vector<ChartObject> two = {at(0, {0, 0, .1, .1}), at(1, {.4, 0, .5, .1})};
  EXPECT_NEAR(build_visual_graph(two, 2.0).edges[0].weight, std::exp(-0.6), 1e-15);
  EXPECT_EQ(build_visual_graph(two, 0.0).edges[0].weight, 1.0);
}

TEST(BuildVisualGraphProperty, CompleteAndKeepsInputOrder) {
  Rng rng(21);
  for (std::size_t n = 1; n <= 40; ++n) {
    const auto objs = cgtest::random_objects(rng, n);
    const auto g = build_visual_graph(objs);
    ASSERT_EQ(g.edges.size(), n * (n - 1) / 2);
    for (std::size_t k = 0; k < n; ++k) {
      ASSERT_EQ(g.node_ids[k], objs[k].id);
      ASSERT_EQ(g.node_classes[k], objs[k].cls);
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++k) {
        ASSERT_EQ(g.edges[k].i, i);
        ASSERT_EQ(g.edges[k].j, j);
        ASSERT_EQ(g.edges[k].weight, std::exp(-min_bbox_distance(objs[i].bbox, objs[j].bbox)));
      }
  }
}

TEST(BuildVisualGraphProperty, WeightDecreasesWithDistance) {
  Rng rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    const BBox a{0, 0, .1, .1};
    const double x0 = rng.uniform(0.11, 0.6);
    const double step = rng.uniform(0.01, 0.3);
    std::vector<ChartObject> near = {at(0, a), at(1, {x0, 0, x0 + .05, .1})};
    std::vector<ChartObject> far = {at(0, a), at(1, {x0 + step, 0, x0 + step + .05, .1})};
    ASSERT_GT(build_visual_graph(near).edges[0].weight, build_visual_graph(far).edges[0].weight);
  }
}

TEST(BuildVisualGraphProperty, PermutationRelabelsNodes) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto objs = cgtest::random_objects(rng, static_cast<std::size_t>(rng.between(2, 15)));
    const auto perm = cgtest::random_permutation(rng, objs.size());
    const auto g = build_visual_graph(objs);
    const auto gp = build_visual_graph(cgtest::permute(objs, perm));
    auto weight = [](const WeightedGraph& gr, std::size_t i, std::size_t j) {
      for (const auto& e : gr.edges)
        if ((e.i == i && e.j == j) || (e.i == j && e.j == i)) return e.weight;
      return -1.0;
    };
    for (std::size_t a = 0; a < perm.size(); ++a)
      for (std::size_t b = a + 1; b < perm.size(); ++b) ASSERT_EQ(weight(gp, a, b), weight(g, perm[a], perm[b]));
  }
}

TEST(InitVisualNodesPatch, Examples) {
  const PatchGrid g(2, 2);
  Matrix states{{1, 1}, {3, 3}, {5, 7}, {0, 2}};
  std::vector<ChartObject> first = {at(0, {0, 0, .5, .5})};
  EXPECT_EQ(init_visual_nodes_patch(first, g, states), (Matrix{{1, 1}}));

  std::vector<ChartObject> top = {at(0, {0, 0, 1, .5})};
  EXPECT_EQ(init_visual_nodes_patch(top, g, states), (Matrix{{2, 2}}));

  Rng rng(24);
  const Matrix r = cgtest::random_matrix(rng, 4, 3);
  std::vector<ChartObject> full = {at(0, {0, 0, 1, 1})};
  const Matrix v = init_visual_nodes_patch(full, g, r);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(v(0, k), (r(0, k) + r(1, k) + r(2, k) + r(3, k)) / 4.0, 1e-15);
  }
}

TEST(InitVisualNodesPatch, Errors) {
  const PatchGrid g(2, 2);
  std::vector<ChartObject> o = {at(0, {0, 0, 1, 1})};
  EXPECT_EQ(code_of([&] { init_visual_nodes_patch(o, g, Matrix(3, 2)); }), ErrorCode::ShapeMismatch);
  Matrix bad(4, 2);
  bad(1, 1) = NAN;
  EXPECT_EQ(code_of([&] { init_visual_nodes_patch(o, g, bad); }), ErrorCode::NonFiniteInput);
}

TEST(InitVisualNodesPatchProperty, RowsAreConvexCombinations) {
  Rng rng(25);
  for (int trial = 0; trial < 200; ++trial) {
    const PatchGrid g(static_cast<std::size_t>(rng.between(1, 8)), static_cast<std::size_t>(rng.between(1, 8)));
    const auto objs = cgtest::random_objects(rng, 6);
    const Matrix states = cgtest::random_matrix(rng, g.size(), 4);
    const Matrix v = init_visual_nodes_patch(objs, g, states);
    for (std::size_t o = 0; o < objs.size(); ++o) {
      const auto cells = patch_alignment(objs[o].bbox, g);
      for (std::size_t k = 0; k < 4; ++k) {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t p : cells) {
          lo = std::min(lo, states(p, k));
          hi = std::max(hi, states(p, k));
        }
        ASSERT_GE(v(o, k), lo - 1e-15);
        ASSERT_LE(v(o, k), hi + 1e-15);
      }
    }
  }
}

TEST(InitVisualNodesRoi, CopiesInObjectOrder) {
  std::vector<ChartObject> one = {at(3, {0, 0, 1, 1})};
  EXPECT_EQ(init_visual_nodes_roi(Matrix{{4, 5}}, one), (Matrix{{4, 5}}));
  std::vector<ChartObject> shuffled = {at(9, {0, 0, 1, 1}), at(1, {0, 0, 1, 1}), at(5, {0, 0, 1, 1})};
  const Matrix rois{{1, 0}, {2, 0}, {3, 0}};
  EXPECT_EQ(init_visual_nodes_roi(rois, shuffled), rois);
  EXPECT_EQ(code_of([&] { init_visual_nodes_roi(Matrix(2, 2), shuffled); }), ErrorCode::ShapeMismatch);
}
