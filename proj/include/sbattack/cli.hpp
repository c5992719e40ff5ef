#pragma once

#include <iosfwd>

namespace sbattack {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Entry point of the `sbattack` tool (subcommands synth, prepare, verify,
/// attack, report). Never throws; failures become exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sbattack
