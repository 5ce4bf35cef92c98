#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace condexp::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 2;        // not sufficient / not converged / check failed
inline constexpr int kExitHypothesis = 3;      // hypothesis not met
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInputFormat = 65;

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest round-trip decimal form, identical across runs.
std::string format_double(double v);

} // namespace condexp::cli
