#pragma once

#include <ostream>

namespace dpaf::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `dpaf` tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpaf::cli
