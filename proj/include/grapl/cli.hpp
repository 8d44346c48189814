#pragma once

namespace grapl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadArgs = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `grapl` executable: verbs segment, eval, inspect, baseline.
int run_cli(int argc, const char* const* argv);

}  // namespace grapl
