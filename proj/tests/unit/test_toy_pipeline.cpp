#include <gtest/gtest.h>

#include <cmath>

#include "chartgraph/error.hpp"
#include "chartgraph/metrics.hpp"
#include "chartgraph/training.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace chartgraph;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.train_size = 24;
  c.test_size = 8;
  c.epochs = 3;
  c.batch = 4;
  c.dim = 8;
  c.embed_dim = 8;
  c.decoder_embed = 4;
  c.decoder_hidden = 8;
  c.module.grid = PatchGrid(4, 4);
  return c;
}

std::size_t count_class(const ChartAnnotation& a, ObjectClass c) {
  return static_cast<std::size_t>(
      std::count_if(a.objects.begin(), a.objects.end(), [c](const auto& o) { return o.cls == c; }));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST(Generator, SingleBarHasAxisLabelOverlap) {
  Rng rng(81);
  const auto s = generate_synthetic_chart(rng, {ChartType::Bar, 1});
  EXPECT_EQ(count_class(s.annotation, ObjectClass::Bar), 1u);
  EXPECT_GE(count_class(s.annotation, ObjectClass::XAxisLabel), 1u);
  EXPECT_GE(count_class(s.annotation, ObjectClass::YAxisLabel), 1u);
  const auto g = build_textual_graph(s.annotation.objects, TextualEdgeMode::Rules);
  EXPECT_TRUE(std::any_of(g.edges.begin(), g.edges.end(),
                          [](const RuleEdge& e) { return e.rule == EdgeRule::AxisLabelToShape; }));
}

TEST(Generator, PieContract) {
  Rng rng(82);
  const auto s = generate_synthetic_chart(rng, {ChartType::Pie, 3});
  EXPECT_EQ(count_class(s.annotation, ObjectClass::Pie), 1u);
  EXPECT_EQ(count_class(s.annotation, ObjectClass::PieSlice), 3u);
  EXPECT_EQ(count_class(s.annotation, ObjectClass::PieLabel), 3u);
}

TEST(Generator, Deterministic) {
  for (auto type : {ChartType::Bar, ChartType::Line, ChartType::Pie}) {
    Rng a(83), b(83);
    const auto sa = generate_synthetic_chart(a, {type, 3});
    const auto sb = generate_synthetic_chart(b, {type, 3});
    EXPECT_EQ(sa, sb);
    EXPECT_EQ(serialize_annotation(sa.annotation), serialize_annotation(sb.annotation));
  }
}

TEST(GeneratorProperty, ValidAndEveryShapeConnected) {
  Rng rng(84);
  const auto& vocab = Vocabulary::standard();
  for (int trial = 0; trial < 300; ++trial) {
    const auto type = static_cast<ChartType>(rng.below(3));
    const int max_n = type == ChartType::Line ? 4 : 8;
    const auto n = static_cast<std::size_t>(rng.between(1, max_n));
    const auto s = generate_synthetic_chart(rng, {type, n});
    ASSERT_NO_THROW(validate_structure(s.annotation));
    ASSERT_TRUE(validate_semantics(s.annotation).empty()) << "trial " << trial;
    std::vector<Warning> warnings;
    const auto g = build_textual_graph(s.annotation.objects, TextualEdgeMode::Rules, &warnings);
    ASSERT_TRUE(warnings.empty());
    for (const auto& node : g.nodes) {
      if (node.kind != NodeKind::Label || !is_shape(*parse_class_name(node.text))) continue;
      const bool connected = std::any_of(g.edges.begin(), g.edges.end(),
                                         [&](const RuleEdge& e) { return e.i == node.index || e.j == node.index; });
      ASSERT_TRUE(connected) << "trial " << trial << " node " << node.index;
    }
    ASSERT_FALSE(s.answer_tokens.empty());
    ASSERT_EQ(s.answer_tokens.back(), vocab.eos());
    for (TokenId t : s.question_tokens) ASSERT_LT(t, vocab.size());
    for (TokenId t : s.answer_tokens) ASSERT_LT(t, vocab.size());
    ASSERT_EQ(vocab.detokenize(s.answer_tokens), s.answer_text);
  }
}

TEST(PseudoEncoder, PatchFeaturesFollowOccupancy) {
  Rng rng(85);
  const auto s = generate_synthetic_chart(rng, {ChartType::Bar, 3});
  const PatchGrid grid(8, 8);
  const PseudoEncoder enc(1, 5);
  const Matrix states = enc.encode_patches(s.annotation, grid);
  const Matrix occ = PseudoEncoder::occupancy(s.annotation, grid);
  ASSERT_EQ(states.rows(), grid.size());
  ASSERT_EQ(states.cols(), 5u);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto o = occ.row(p);
    if (std::all_of(o.begin(), o.end(), [](double v) { return v == 0.0; })) {
      for (double v : states.row(p)) ASSERT_EQ(v, 0.0);
    }
  }
  EXPECT_EQ(PseudoEncoder(1, 5).encode_patches(s.annotation, grid), states);
  EXPECT_NE(PseudoEncoder(2, 5).encode_patches(s.annotation, grid), states);
  EXPECT_EQ(enc.encode_rois(s.annotation).rows(), kRoiSlots);
}

TEST(Decoder, ZeroParamsGiveZeroLogits) {
  Rng rng(86);
  const auto p = DecoderParams::zeros_like(DecoderParams::init(4, 3, 5, 20, rng));
  const std::vector<TokenId> q = {4, 5}, a = {7, 8, 2};
  const auto out = decoder_forward(cgtest::random_matrix(rng, 9, 4), q, a, p);
  EXPECT_EQ(out.logits, Matrix(3, 20));
}

TEST(Decoder, ShapeContract) {
  Rng rng(87);
  const auto p = DecoderParams::init(4, 3, 5, 20, rng);
  for (std::size_t len = 1; len <= 5; ++len) {
    std::vector<TokenId> a(len, 3);
    const std::vector<TokenId> q = {4};
    const auto out = decoder_forward(cgtest::random_matrix(rng, 6, 4), q, a, p);
    EXPECT_EQ(out.logits.rows(), len);
    EXPECT_EQ(out.logits.cols(), 20u);
  }
  const std::vector<TokenId> q = {4}, a = {3};
  EXPECT_EQ(code_of([&] { decoder_forward(Matrix(6, 5), q, a, p); }), ErrorCode::ShapeMismatch);
  const std::vector<TokenId> bad = {20};
  EXPECT_EQ(code_of([&] { decoder_forward(Matrix(6, 4), q, bad, p); }), ErrorCode::IndexOutOfVocab);
}

TEST(Decoder, HandComputedForward) {
  DecoderParams p;
  p.embed = Matrix{{0.5}, {-1}, {2}};
  p.wh = Matrix{{1}, {2}, {1}};
  p.bh = {0.5};
  p.wo = Matrix{{1, -1, 0.5}};
  p.bo = {0, 1, 0};
  // pooled states 2, question mean 0.5, prev (BOS) -1: pre = 2 + 1 - 1 + 0.5 = 2.5
  const std::vector<TokenId> q = {0}, a = {2};
  const auto out = decoder_forward(Matrix{{1}, {3}}, q, a, p);
  EXPECT_EQ(out.logits, (Matrix{{2.5, -1.5, 1.25}}));
  // Second position feeds the embedding of the first answer token (2): pre = 2 + 1 + 2 + 0.5.
  const std::vector<TokenId> a2 = {2, 0};
  EXPECT_EQ(decoder_forward(Matrix{{1}, {3}}, q, a2, p).logits, (Matrix{{2.5, -1.5, 1.25}, {5.5, -4.5, 2.75}}));
}

TEST(Decoder, BackwardMatchesFiniteDifferences) {
  Rng rng(88);
  auto p = DecoderParams::init(3, 2, 4, 12, rng);
  for (double& b : p.bh) b = rng.uniform(-0.3, 0.3);
  Matrix states = cgtest::random_matrix(rng, 5, 3);
  const std::vector<TokenId> q = {3, 4, 3}, a = {5, 6, 2};
  auto loss = [&] { return nll_loss(decoder_forward(states, q, a, p).logits, a).loss; };
  const auto fwd = decoder_forward(states, q, a, p);
  auto back = decoder_backward(fwd.tape, p, nll_loss(fwd.logits, a).dlogits);
  EXPECT_LT(finite_diff_check(states.values(), back.d_states.values(), loss), 1e-6);
  auto pt = p.tensors();
  auto gt = back.grads.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    EXPECT_LT(finite_diff_check(pt[k].second, gt[k].second, loss), 1e-6) << pt[k].first;
  }
}

TEST(Decoder, GreedyStopsAtEosOrMaxLen) {
  DecoderParams p;
  p.embed = Matrix(5, 1);
  p.wh = Matrix(3, 1);
  p.bh = {1};
  p.wo = Matrix{{0, 0, 1, 0, 0}};
  p.bo = {0, 0, 0, 0, 0};
  const std::vector<TokenId> q = {3};
  EXPECT_EQ(decoder_greedy(Matrix(2, 1), q, p, 1, 2, 4), (std::vector<TokenId>{2}));
  p.wo = Matrix{{0, 0, 0, 1, 0}};
  EXPECT_EQ(decoder_greedy(Matrix(2, 1), q, p, 1, 2, 4), (std::vector<TokenId>{3, 3, 3, 3}));
}

TEST(Nll, Examples) {
  const std::vector<TokenId> a = {1, 4, 9};
  EXPECT_NEAR(nll_loss(Matrix(3, 10), a).loss, 3 * std::log(10.0), 1e-12);
  Matrix sharp(1, 4);
  sharp(0, 2) = 800;
  const std::vector<TokenId> two = {2};
  EXPECT_EQ(nll_loss(sharp, two).loss, 0.0);
  const std::vector<TokenId> bad = {4};
  EXPECT_EQ(code_of([&] { nll_loss(Matrix(1, 4), bad); }), ErrorCode::IndexOutOfVocab);
}

TEST(NllProperty, MatchesSoftmaxOracle) {
  Rng rng(89);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = static_cast<std::size_t>(rng.between(1, 5));
    const std::size_t vocab = static_cast<std::size_t>(rng.between(2, 40));
    const Matrix logits = cgtest::random_matrix(rng, len, vocab, -10, 10);
    std::vector<TokenId> a(len);
    for (auto& t : a) t = static_cast<TokenId>(rng.below(vocab));
    const double got = nll_loss(logits, a).loss;
    ASSERT_GE(got, 0.0);
    ASSERT_NEAR(got, static_cast<double>(cgtest::brute_nll(logits, a)), 1e-10);
  }
}

TEST(Relaxed, Examples) {
  EXPECT_TRUE(relaxed_match("104", "100"));
  EXPECT_FALSE(relaxed_match("106", "100"));
  EXPECT_TRUE(relaxed_match("cat", "cat"));
  EXPECT_TRUE(relaxed_match("105", "100"));
  EXPECT_TRUE(relaxed_match("95", "100"));
  EXPECT_FALSE(relaxed_match("94.99", "100"));
  EXPECT_TRUE(relaxed_match(" cat ", "cat"));
  EXPECT_FALSE(relaxed_match("Cat", "cat"));
  EXPECT_TRUE(relaxed_match("0", "0"));
  EXPECT_FALSE(relaxed_match("0.001", "0"));
  EXPECT_TRUE(relaxed_match("-10.5", "-10"));
  EXPECT_TRUE(relaxed_match("0.315", "0.3"));
  EXPECT_FALSE(relaxed_match("abc", "100"));
  EXPECT_TRUE(relaxed_match("1e2", "100"));
}

TEST(Relaxed, Accuracy) {
  const std::vector<std::string> p = {"104", "106", "cat", "dog"};
  const std::vector<std::string> g = {"100", "100", "cat", "cat"};
  EXPECT_EQ(relaxed_accuracy(p, g), 0.5);
  EXPECT_EQ(relaxed_accuracy(std::vector<std::string>{}, std::vector<std::string>{}), 0.0);
  const std::vector<std::string> short_list = {"1"};
  EXPECT_EQ(code_of([&] { relaxed_accuracy(short_list, g); }), ErrorCode::LengthMismatch);
}

TEST(Config, JsonRoundTripAndErrors) {
  TrainConfig c = small_config();
  c.optimizer = OptimizerKind::Sgd;
  c.module.graphs = GraphSet::TextualOnly;
  c.module.textual_edges = TextualEdgeMode::FullyConnected;
  c.module.backbone = BackboneMode::Roi;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_NE(config_hash(c), config_hash(TrainConfig{}));
  EXPECT_EQ(config_hash(c).size(), 16u);

  EXPECT_EQ(config_from_json("{}").lr, TrainConfig{}.lr);
  EXPECT_EQ(code_of([] { config_from_json(R"({"epoch": 3})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { config_from_json(R"({"graphs": "all"})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { config_from_json(R"({"lr": "fast"})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { config_from_json(R"({"dropout": 1.0})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { config_from_json("[1"); }), ErrorCode::InvalidConfig);
}

TEST(Dataset, DeterministicAndRoundTrips) {
  const TrainConfig c = small_config();
  const auto a = generate_dataset(c, 7, 12);
  EXPECT_EQ(a, generate_dataset(c, 7, 12));
  EXPECT_NE(a, generate_dataset(c, 8, 12));
  const std::string bytes = serialize_dataset(a, c, 7);
  EXPECT_EQ(parse_dataset(bytes), a);
  EXPECT_EQ(serialize_dataset(parse_dataset(bytes), c, 7), bytes);
  EXPECT_NE(bytes.find(config_hash(c)), std::string::npos);
  EXPECT_THROW(parse_dataset(bytes.substr(bytes.find('\n') + 1)), Error);
}

TEST(Train, ZeroLearningRateKeepsNllConstant) {
  for (auto opt : {OptimizerKind::Sgd, OptimizerKind::AdamW}) {
    TrainConfig c = small_config();
    c.lr = 0.0;
    c.optimizer = opt;
    const auto r = train(c).report;
    ASSERT_EQ(r.epoch_nll.size(), c.epochs);
    for (double v : r.epoch_nll) EXPECT_EQ(v, r.initial_nll);
  }
}

TEST(Train, DeterministicReport) {
  const TrainConfig c = small_config();
  const auto a = report_to_json(train(c).report);
  EXPECT_EQ(a, report_to_json(train(c).report));
  TrainConfig other = c;
  other.seed = 43;
  EXPECT_NE(a, report_to_json(train(other).report));
}

TEST(Train, ReportContents) {
  const TrainConfig c = small_config();
  std::vector<std::size_t> epochs_seen;
  const auto r = train(c, [&](std::size_t e, double) { epochs_seen.push_back(e); }).report;
  EXPECT_EQ(epochs_seen.size(), c.epochs);
  EXPECT_EQ(r.train_size, c.train_size);
  EXPECT_EQ(r.test_size, c.test_size);
  EXPECT_EQ(r.config_hash, config_hash(c));
  EXPECT_GE(r.relaxed_accuracy, 0.0);
  EXPECT_LE(r.relaxed_accuracy, 1.0);
  EXPECT_GE(r.test_nll, 0.0);
  for (double v : r.epoch_nll) EXPECT_GE(v, 0.0);
  EXPECT_LT(r.final_nll(), r.initial_nll);
}

TEST(Train, AblationConfigsAllTrain) {
  for (auto g : {GraphSet::Both, GraphSet::VisualOnly, GraphSet::TextualOnly, GraphSet::None}) {
    for (auto edges : {TextualEdgeMode::Rules, TextualEdgeMode::FullyConnected}) {
      for (auto backbone : {BackboneMode::Patch, BackboneMode::Roi}) {
        TrainConfig c = small_config();
        c.epochs = 1;
        c.module.graphs = g;
        c.module.textual_edges = edges;
        c.module.backbone = backbone;
        const auto r = train(c).report;
        EXPECT_TRUE(std::isfinite(r.final_nll()));
      }
    }
  }
}

TEST(Train, DivergenceIsReported) {
  TrainConfig c = small_config();
  c.optimizer = OptimizerKind::Sgd;
  c.lr = 1e200;
  EXPECT_EQ(code_of([&] { train(c); }), ErrorCode::DivergedLoss);
}

TEST(TrainProperty, SmallSgdStepDoesNotIncreaseBatchLoss) {
  TrainConfig c = small_config();
  const auto data = generate_dataset(c, 90, 200);
  const HashedEmbedder embedder{c.embed_dim};
  int violations = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    c.seed = 1000 + k;
    Model model = init_model(c);
    const auto plan = plan_graph_module(data[k].annotation, c.module, embedder);
    const double before = sample_loss(plan, data[k], model);
    SampleLoss g = sample_loss_and_grads(plan, data[k], model, RunMode::Eval, nullptr);
    ASSERT_NEAR(g.loss, before, 1e-12);
    Optimizer(OptimizerKind::Sgd, 1e-3, 0.0).step(model, g);
    if (sample_loss(plan, data[k], model) > before) ++violations;
  }
  EXPECT_LE(violations, 2);
}
