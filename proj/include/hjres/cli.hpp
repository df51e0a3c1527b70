#pragma once

#include <iosfwd>

namespace hjres::cli {

enum ExitCode : int { Success = 0, Failure = 1, ConfigFailure = 2, NonConvergence = 3 };

/// Full command-line front end (subcommands eikonal1d-grid, eikonal1d-nn, obstacle,
/// isaacs2d, analyze-jacobian). Human-readable progress goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace hjres::cli
