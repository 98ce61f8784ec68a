#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace chartgraph::cli {

struct GradSuiteOptions {
  std::uint64_t seed = 1;
  std::size_t nodes = 6;      // GCN / MLP node count
  std::size_t dim = 4;        // hidden width
  std::size_t embed_dim = 8;  // text embedding width for the full module
  std::size_t grid = 4;       // patch grid side for the full module
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::string inject_fault;  // block whose analytic gradient gets a sign flip
};

struct GradBlockResult {
  std::string block;
  double max_rel_err = 0.0;
  bool passed = false;
};

/// Blocks: gcn, mlp, nll, decoder, graph_module_patch, graph_module_roi.
std::vector<GradBlockResult> run_grad_suite(const GradSuiteOptions& options);

}  // namespace chartgraph::cli
