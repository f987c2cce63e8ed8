#pragma once

#include <string>
#include <vector>

namespace remqst::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// Runs the remqst command line. `args` excludes the program name.
/// Diagnostics go to standard error.
int run(const std::vector<std::string>& args);

}  // namespace remqst::cli
