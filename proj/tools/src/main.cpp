#include <iostream>

#include "chartgraph_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return chartgraph::cli::run_cli(args, std::cout, std::cerr);
}
