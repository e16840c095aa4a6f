#pragma once

#include <string>
#include <vector>

namespace tensmooth::cli {

enum ExitCode : int { kPass = 0, kCriterionFailure = 1, kUsageError = 2 };

/// Parses `args` (without the program name) and runs the selected
/// subcommand. Messages go to stdout and errors to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace tensmooth::cli
