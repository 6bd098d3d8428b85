#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace countssm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEstimation = 3;

/// Runs the count_ssm command line with `args` (program name excluded) and
/// returns the process exit code. Normal output goes to `out`, diagnostics
/// to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace countssm::cli
