#pragma once

#include <iosfwd>

namespace dcgcn {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitNumeric = 3, kExitConfig = 4 };

/// Runs one `dcgcn` command: preprocess, train, generate, evaluate,
/// grad-check or ablate. Errors print a single line to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dcgcn
