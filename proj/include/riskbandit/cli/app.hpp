#pragma once

#include <iosfwd>

namespace riskbandit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `riskbandit` tool: commands train, eval, sweep and bench.
/// Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace riskbandit::cli
