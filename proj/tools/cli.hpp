#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace drh::cli {

/// Process exit statuses.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDataError = 3,
  kNumericFailure = 4,
};

/// Runs `drh <args...>`; `args` excludes the program name. Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drh::cli
