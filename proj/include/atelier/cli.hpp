#pragma once

#include <ostream>

namespace atelier::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOperational = 1;
inline constexpr int kExitConfig = 2;

/// Entry point for the `atelier` tool. Writes one JSON report to `out` and
/// diagnostics to `err`; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace atelier::cli
