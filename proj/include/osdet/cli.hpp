#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace osdet::cli {

enum ExitCode : int { kSuccess = 0, kValidationError = 1, kUsageError = 2 };

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace osdet::cli
