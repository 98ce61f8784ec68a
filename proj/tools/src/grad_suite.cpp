#include "chartgraph_cli/grad_suite.hpp"

#include <algorithm>
#include <functional>
#include <span>

#include "chartgraph/decoder.hpp"
#include "chartgraph/gnn.hpp"
#include "chartgraph/graph_module.hpp"
#include "chartgraph/synthetic.hpp"

namespace chartgraph::cli {

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

double dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
  return s;
}

// Random symmetric weighted graph with self-loop normalization.
Matrix random_adjacency(std::size_t n, Rng& rng) {
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.6)) edges.push_back({i, j, rng.uniform(0.05, 1.0)});
  return normalized_adjacency(n, edges);
}

class BlockCheck {
 public:
  BlockCheck(std::string name, const GradSuiteOptions& opts) : opts_(opts) { result_.block = std::move(name); }

  void check(std::span<double> params, std::vector<double> analytic, const std::function<double()>& loss) {
    if (opts_.inject_fault == result_.block && !analytic.empty()) {
      for (double& g : analytic) g = -g;
    }
    GradCheckOptions gc;
    gc.eps = opts_.eps;
    gc.seed = opts_.seed;
    result_.max_rel_err = std::max(result_.max_rel_err, finite_diff_check(params, analytic, loss, gc));
  }

  GradBlockResult finish() {
    result_.passed = result_.max_rel_err < opts_.tolerance;
    return result_;
  }

 private:
  const GradSuiteOptions& opts_;
  GradBlockResult result_;
};

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

GradBlockResult check_gcn(const GradSuiteOptions& o) {
  Rng rng = Rng(o.seed).fork(1);
  const Matrix adj = random_adjacency(o.nodes, rng);
  Matrix x = random_matrix(o.nodes, o.dim + 1, rng);
  GcnParams p = GcnParams::glorot(o.dim + 1, o.dim, o.dim, rng, 0.2);
  const Matrix r = random_matrix(o.nodes, o.dim, rng);
  const std::uint64_t dropout_seed = rng.next_u64();
  // Train mode with a dropout mask that is identical on every evaluation.
  auto loss = [&] {
    Rng d(dropout_seed);
    return dot(gcn_forward(adj, x, p, RunMode::Train, &d).h, r);
  };
  Rng d(dropout_seed);
  const GcnOutput out = gcn_forward(adj, x, p, RunMode::Train, &d);
  const GcnGrads g = gcn_backward(out.tape, r);
  BlockCheck check("gcn", o);
  check.check(x.values(), copy(g.dx.values()), loss);
  check.check(p.w1.values(), copy(g.dw1.values()), loss);
  check.check(p.w2.values(), copy(g.dw2.values()), loss);
  return check.finish();
}

GradBlockResult check_mlp(const GradSuiteOptions& o) {
  Rng rng = Rng(o.seed).fork(2);
  Matrix x = random_matrix(o.nodes, 2 * o.dim, rng);
  MlpParams p = MlpParams::glorot(2 * o.dim, o.dim, o.dim, rng);
  for (double& v : p.ba) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.bb) v = rng.uniform(-0.5, 0.5);
  const Matrix r = random_matrix(o.nodes, o.dim, rng);
  auto loss = [&] { return dot(mlp_forward(x, p).out, r); };
  const MlpGrads g = mlp_backward(mlp_forward(x, p).tape, r);
  BlockCheck check("mlp", o);
  check.check(x.values(), copy(g.dinput.values()), loss);
  check.check(p.wa.values(), copy(g.dwa.values()), loss);
  check.check(p.ba, g.dba, loss);
  check.check(p.wb.values(), copy(g.dwb.values()), loss);
  check.check(p.bb, g.dbb, loss);
  return check.finish();
}

GradBlockResult check_nll(const GradSuiteOptions& o) {
  Rng rng = Rng(o.seed).fork(3);
  const std::size_t vocab = 7;
  Matrix logits = random_matrix(3, vocab, rng);
  for (double& v : logits.values()) v *= 3.0;
  std::vector<TokenId> answer;
  for (std::size_t j = 0; j < logits.rows(); ++j) answer.push_back(static_cast<TokenId>(rng.below(vocab)));
  auto loss = [&] { return nll_loss(logits, answer).loss; };
  BlockCheck check("nll", o);
  check.check(logits.values(), copy(nll_loss(logits, answer).dlogits.values()), loss);
  return check.finish();
}

GradBlockResult check_decoder(const GradSuiteOptions& o) {
  Rng rng = Rng(o.seed).fork(4);
  const Vocabulary& vocab = Vocabulary::standard();
  Matrix states = random_matrix(o.nodes, o.dim, rng);
  DecoderParams p = DecoderParams::init(o.dim, 3, 5, vocab.size(), rng);
  for (double& v : p.bh) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.bo) v = rng.uniform(-0.5, 0.5);
  const std::vector<TokenId> question = {vocab.id("value"), vocab.id("of"), vocab.id("C")};
  const std::vector<TokenId> answer = {vocab.id("40"), vocab.eos()};
  auto loss = [&] { return nll_loss(decoder_forward(states, question, answer, p).logits, answer).loss; };
  const DecoderOutput out = decoder_forward(states, question, answer, p);
  DecoderBackward g = decoder_backward(out.tape, p, nll_loss(out.logits, answer).dlogits);
  BlockCheck check("decoder", o);
  check.check(states.values(), copy(g.d_states.values()), loss);
  auto pt = p.tensors();
  auto gt = g.grads.tensors();
  for (std::size_t t = 0; t < pt.size(); ++t) check.check(pt[t].second, copy(gt[t].second), loss);
  return check.finish();
}

GradBlockResult check_graph_module(const GradSuiteOptions& o, BackboneMode backbone) {
  Rng rng = Rng(o.seed).fork(backbone == BackboneMode::Patch ? 5 : 6);
  ChartSample sample = generate_synthetic_chart(rng, {ChartType::Pie, 3});
  GraphModuleConfig config;
  config.backbone = backbone;
  config.grid = PatchGrid(o.grid, o.grid);
  const GraphPlan plan = plan_graph_module(sample.annotation, config, HashedEmbedder{o.embed_dim});
  GraphModuleParams p = GraphModuleParams::init(o.dim, o.embed_dim, rng);
  for (double& v : p.text_proj.bias) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.mlp.ba) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.mlp.bb) v = rng.uniform(-0.5, 0.5);
  Matrix states = random_matrix(plan.num_slots(), o.dim, rng);
  const Matrix r = random_matrix(plan.num_slots(), o.dim, rng);
  const std::uint64_t dropout_seed = rng.next_u64();
  auto loss = [&] {
    Rng d(dropout_seed);
    return dot(graph_module_forward(plan, states, p, RunMode::Train, &d).fused, r);
  };
  Rng d(dropout_seed);
  const GraphModuleOutput out = graph_module_forward(plan, states, p, RunMode::Train, &d);
  GraphModuleBackward g = graph_module_backward(plan, out.tape, p, r);
  BlockCheck check(backbone == BackboneMode::Patch ? "graph_module_patch" : "graph_module_roi", o);
  check.check(states.values(), copy(g.d_encoder.values()), loss);
  auto pt = p.tensors();
  auto gt = g.grads.tensors();
  for (std::size_t t = 0; t < pt.size(); ++t) check.check(pt[t].second, copy(gt[t].second), loss);
  return check.finish();
}

}  // namespace

std::vector<GradBlockResult> run_grad_suite(const GradSuiteOptions& options) {
  return {
      check_gcn(options),
      check_mlp(options),
      check_nll(options),
      check_decoder(options),
      check_graph_module(options, BackboneMode::Patch),
      check_graph_module(options, BackboneMode::Roi),
  };
}

}  // namespace chartgraph::cli
