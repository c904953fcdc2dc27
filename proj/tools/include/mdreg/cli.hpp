#pragma once

// The `mdreg` command line: generate, train, embed, diffuse, adapt, bench and
// project subcommands over one versioned JSON config format.

#include <iosfwd>
#include <string>
#include <vector>

namespace mdreg::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kInternal = 1,    // unexpected failure (bug or I/O outside our control)
  kValidation = 2,  // bad flags, config or input files
  kTraining = 3,    // training diverged
  kSolver = 4,      // a linear solve failed
};

/// Runs one invocation. `args` excludes the program name. Log lines go to
/// `err`, help text to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdreg::cli
