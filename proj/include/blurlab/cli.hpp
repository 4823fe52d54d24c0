#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace blurlab::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kUsage = 2;

// Runs one command line (without the program name). Relative output paths
// are resolved under $BLURLAB_OUTPUT_ROOT when it is set.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blurlab::cli
