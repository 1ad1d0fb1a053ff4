#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace latnet::cli {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitUserError = 1,     ///< bad flags, missing files, shape or format errors
    kExitNumericError = 2,  ///< solver instability, training divergence, non-finite rollout
};

/// Parses `args` (args[0] is the program name) and runs one subcommand.
/// Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace latnet::cli
