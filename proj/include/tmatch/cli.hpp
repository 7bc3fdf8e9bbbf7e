#pragma once

#include <iosfwd>

namespace tmatch {

// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitEstimationFailure = 3;

// Subcommands `analyze`, `band` and `simulate`. Results go to `out`,
// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tmatch
