#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wobble::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitStatus : int { kSuccess = 0, kUsageError = 1, kRuntimeFailure = 2 };

/// Entry point of the `wobble` tool. `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wobble::cli
