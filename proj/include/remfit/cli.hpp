#pragma once

#include <iosfwd>

namespace remfit::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kValidationError = 3,
  kConvergenceError = 4,
  kGuardError = 5,
};

// Entry point of the remfit command (subcommands ingest, fit, simulate).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace remfit::cli
