#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "chartgraph/matrix.hpp"
#include "chartgraph/rng.hpp"
#include "chartgraph/textual_graph.hpp"
#include "chartgraph/visual_graph.hpp"

namespace chartgraph {

// ---- propagation operator ---------------------------------------------------

/// D^-1/2 (A + I) D^-1/2 for the symmetric weighted adjacency A over n
/// nodes, D being the degree matrix of A + I. Exactly symmetric.
Matrix normalized_adjacency(std::size_t n, std::span<const WeightedEdge> edges);
Matrix normalized_adjacency(const WeightedGraph& g);
/// Textual edges carry unit weight.
Matrix normalized_adjacency(const TextualGraph& g);

/// Uniform Glorot range sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

enum class RunMode { Eval, Train };

// ---- two-layer GCN ----------------------------------------------------------

/// H = A * dropout(ReLU(A * X * W1)) * W2, no activation after layer 2.
struct GcnParams {
  Matrix w1;  // in_dim x hidden
  Matrix w2;  // hidden x out_dim
  double dropout = 0.2;

  static GcnParams glorot(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& rng,
                          double dropout = 0.2);
};

struct GcnTape {
  Matrix adj;
  Matrix x;
  Matrix ax;    // A X
  Matrix z1;    // A X W1
  Matrix mask;  // inverted-dropout multipliers; empty in Eval mode
  Matrix y;     // A * dropout(ReLU(z1))
  Matrix w1;
  Matrix w2;
};

struct GcnOutput {
  Matrix h;
  GcnTape tape;
};

struct GcnGrads {
  Matrix dx;
  Matrix dw1;
  Matrix dw2;
};

/// Train mode draws an inverted-dropout mask from `rng` (required);
/// Eval mode ignores it. Throws ShapeMismatch / NonFiniteInput.
GcnOutput gcn_forward(const Matrix& adj, const Matrix& x, const GcnParams& params, RunMode mode,
                      Rng* rng = nullptr);

/// Exact gradients of gcn_forward under the recorded mask. Throws
/// Error(TapeMismatch) when dh does not match the recorded output shape.
GcnGrads gcn_backward(const GcnTape& tape, const Matrix& dh);

// ---- projection MLP ---------------------------------------------------------

/// out = ReLU(x * Wa + ba) * Wb + bb
struct MlpParams {
  Matrix wa;
  std::vector<double> ba;
  Matrix wb;
  std::vector<double> bb;

  static MlpParams glorot(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& rng);
};

struct MlpTape {
  Matrix input;
  Matrix pre;     // x * Wa + ba
  Matrix hidden;  // ReLU(pre)
  Matrix wa;
  Matrix wb;
};

struct MlpOutput {
  Matrix out;
  MlpTape tape;
};

struct MlpGrads {
  Matrix dinput;
  Matrix dwa;
  std::vector<double> dba;
  Matrix dwb;
  std::vector<double> dbb;
};

MlpOutput mlp_forward(const Matrix& input, const MlpParams& params);
MlpGrads mlp_backward(const MlpTape& tape, const Matrix& dout);

// ---- gradient checking --------------------------------------------------------

struct GradCheckOptions {
  double eps = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded random sample.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

/// Max over checked coordinates of |analytic - central difference| /
/// max(1, |analytic|). `loss` is re-evaluated after each in-place
/// perturbation of `params`; values are restored afterwards.
double finite_diff_check(std::span<double> params, std::span<const double> analytic,
                         const std::function<double()>& loss, const GradCheckOptions& options = {});

/// Functional form: f is evaluated at x +- eps e_k.
double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> x, std::span<const double> analytic,
                         const GradCheckOptions& options = {});

}  // namespace chartgraph
