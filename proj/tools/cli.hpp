#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace etacurv::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitPrecondition = 3,
  kExitSolveFailed = 4,
};

/// Runs the etacurv command with `args` (program name excluded).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace etacurv::cli
