#pragma once

#include <iosfwd>

namespace neurotouch::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kUsageError = 2,
  kDecodeError = 3,
  kConfigError = 4,
};

/// Entry point of the `neurotouch` tool. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace neurotouch::cli
