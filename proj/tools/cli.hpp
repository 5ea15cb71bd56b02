#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fairdiv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNoConvergence = 3;

/// Runs one command line; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairdiv::cli
