#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chartgraph::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;  // parse, schema, config or flag errors
inline constexpr int kExitIo = 2;
inline constexpr int kExitGradCheck = 3;
inline constexpr int kExitDiverged = 4;

/// args excludes the program name. Machine-readable results go to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_text();

}  // namespace chartgraph::cli
