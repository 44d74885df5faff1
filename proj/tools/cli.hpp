#pragma once

#include <iosfwd>

namespace hashednets::cli {

/// Exit codes besides 0 and the usage-error codes of the argument parser.
inline constexpr int kRuntimeError = 1;
inline constexpr int kCheckFailed = 3;

/// Entry point of the `hashednets` tool. Results and the effective
/// configuration go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hashednets::cli
