#include "chartgraph/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chartgraph/error.hpp"

namespace chartgraph {

Matrix normalized_adjacency(std::size_t n, std::span<const WeightedEdge> edges) {
  Matrix a = Matrix::identity(n);
  for (const auto& e : edges) {
    if (e.i >= n || e.j >= n || e.i == e.j) {
      throw Error(ErrorCode::ShapeMismatch, "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                                ") invalid for " + std::to_string(n) + " nodes");
    }
    a(e.i, e.j) += e.weight;
    a(e.j, e.i) += e.weight;
  }
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : a.row(i)) degree[i] += v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      if (a(i, j) == 0.0) continue;
      const double v = a(i, j) / std::sqrt(degree[i] * degree[j]);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

Matrix normalized_adjacency(const WeightedGraph& g) { return normalized_adjacency(g.node_count(), g.edges); }

Matrix normalized_adjacency(const TextualGraph& g) {
  std::vector<WeightedEdge> edges;
  edges.reserve(g.edges.size());
  for (const auto& e : g.edges) edges.push_back({e.i, e.j, 1.0});
  return normalized_adjacency(g.node_count(), edges);
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
  return w;
}

GcnParams GcnParams::glorot(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& rng,
                            double dropout) {
  GcnParams p;
  p.w1 = glorot_uniform(in_dim, hidden, rng);
  p.w2 = glorot_uniform(hidden, out_dim, rng);
  p.dropout = dropout;
  return p;
}

GcnOutput gcn_forward(const Matrix& adj, const Matrix& x, const GcnParams& params, RunMode mode, Rng* rng) {
  if (adj.rows() != adj.cols() || adj.rows() != x.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "adjacency is " + std::to_string(adj.rows()) + "x" +
                                              std::to_string(adj.cols()) + " for " +
                                              std::to_string(x.rows()) + " feature rows");
  }
  if (params.w1.rows() != x.cols() || params.w2.rows() != params.w1.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "GCN weight shapes do not chain with input dim " +
                                              std::to_string(x.cols()));
  }
  if (!x.all_finite() || !adj.all_finite()) throw Error(ErrorCode::NonFiniteInput, "GCN input has non-finite values");
  if (!(params.dropout >= 0.0 && params.dropout < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "dropout must lie in [0, 1)");
  }

  GcnOutput out;
  GcnTape& t = out.tape;
  t.adj = adj;
  t.x = x;
  t.w1 = params.w1;
  t.w2 = params.w2;
  t.ax = matmul(adj, x);
  t.z1 = matmul(t.ax, params.w1);
  Matrix hidden = relu(t.z1);
  if (mode == RunMode::Train) {
    if (rng == nullptr) throw Error(ErrorCode::InvalidConfig, "train mode needs an rng for dropout");
    t.mask = Matrix(hidden.rows(), hidden.cols());
    const double keep_scale = 1.0 / (1.0 - params.dropout);
    for (double& m : t.mask.values()) m = rng->bernoulli(params.dropout) ? 0.0 : keep_scale;
    hidden = hadamard(hidden, t.mask);
  }
  t.y = matmul(adj, hidden);
  out.h = matmul(t.y, params.w2);
  return out;
}

GcnGrads gcn_backward(const GcnTape& tape, const Matrix& dh) {
  if (dh.rows() != tape.y.rows() || dh.cols() != tape.w2.cols()) {
    throw Error(ErrorCode::TapeMismatch, "output gradient shape does not match the recorded forward pass");
  }
  GcnGrads g;
  g.dw2 = matmul_tn(tape.y, dh);
  const Matrix dy = matmul_nt(dh, tape.w2);
  Matrix dhidden = matmul_tn(tape.adj, dy);
  if (!tape.mask.empty()) dhidden = hadamard(dhidden, tape.mask);
  const Matrix dz1 = relu_backward(tape.z1, dhidden);
  g.dw1 = matmul_tn(tape.ax, dz1);
  const Matrix dax = matmul_nt(dz1, tape.w1);
  g.dx = matmul_tn(tape.adj, dax);
  return g;
}

MlpParams MlpParams::glorot(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& rng) {
  MlpParams p;
  p.wa = glorot_uniform(in_dim, hidden, rng);
  p.ba.assign(hidden, 0.0);
  p.wb = glorot_uniform(hidden, out_dim, rng);
  p.bb.assign(out_dim, 0.0);
  return p;
}

MlpOutput mlp_forward(const Matrix& input, const MlpParams& params) {
  if (input.cols() != params.wa.rows() || params.ba.size() != params.wa.cols() ||
      params.wb.rows() != params.wa.cols() || params.bb.size() != params.wb.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "MLP parameters do not match input width " +
                                              std::to_string(input.cols()));
  }
  MlpOutput out;
  MlpTape& t = out.tape;
  t.input = input;
  t.wa = params.wa;
  t.wb = params.wb;
  t.pre = matmul(input, params.wa);
  add_row_broadcast(t.pre, params.ba);
  t.hidden = relu(t.pre);
  out.out = matmul(t.hidden, params.wb);
  add_row_broadcast(out.out, params.bb);
  return out;
}

MlpGrads mlp_backward(const MlpTape& tape, const Matrix& dout) {
  if (dout.rows() != tape.hidden.rows() || dout.cols() != tape.wb.cols()) {
    throw Error(ErrorCode::TapeMismatch, "MLP output gradient shape does not match the forward pass");
  }
  MlpGrads g;
  g.dwb = matmul_tn(tape.hidden, dout);
  g.dbb = column_sums(dout);
  const Matrix dpre = relu_backward(tape.pre, matmul_nt(dout, tape.wb));
  g.dwa = matmul_tn(tape.input, dpre);
  g.dba = column_sums(dpre);
  g.dinput = matmul_nt(dpre, tape.wa);
  return g;
}

double finite_diff_check(std::span<double> params, std::span<const double> analytic,
                         const std::function<double()>& loss, const GradCheckOptions& options) {
  if (params.size() != analytic.size()) {
    throw Error(ErrorCode::ShapeMismatch, "analytic gradient length differs from parameter count");
  }
  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (options.max_coords != 0 && options.max_coords < coords.size()) {
    Rng rng(options.seed);
    for (std::size_t k = 0; k < options.max_coords; ++k) {
      std::swap(coords[k], coords[k + rng.below(coords.size() - k)]);
    }
    coords.resize(options.max_coords);
  }

  double worst = 0.0;
  for (std::size_t k : coords) {
    const double saved = params[k];
    params[k] = saved + options.eps;
    const double up = loss();
    params[k] = saved - options.eps;
    const double down = loss();
    params[k] = saved;
    const double numeric = (up - down) / (2.0 * options.eps);
    const double err = std::abs(analytic[k] - numeric) / std::max(1.0, std::abs(analytic[k]));
    worst = std::max(worst, err);
  }
  return worst;
}

double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> x, std::span<const double> analytic,
                         const GradCheckOptions& options) {
  std::vector<double> point(x.begin(), x.end());
  return finite_diff_check(point, analytic, [&] { return f(point); }, options);
}

}  // namespace chartgraph
