#pragma once

#include <atomic>
#include <ostream>

namespace klrl::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitCheckFailed = 2;
inline constexpr int kExitInterrupted = 130;

/// Subcommands: run-bandit, run-mdp, check-theory, fit, sweep.
/// Returns the process exit code; never throws.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                 const std::atomic<bool>* cancel = nullptr);

}  // namespace klrl::harness
