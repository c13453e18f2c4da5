#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stochvec {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitInvalidConfig = 1, kExitTolExceeded = 2, kExitInternal = 3 };

/// Output of `git describe` at configure time.
const char* build_version();

/// Parses `args` (without the program name) and dispatches to a subcommand:
/// simulate, pde, duality, verify-operator, moments.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stochvec
