#pragma once

#include <iosfwd>

namespace brm {

/// Exit statuses of the command-line runner.
enum ExitStatus : int {
  kExitOk = 0,
  kExitFailure = 1,     // I/O and other unexpected errors
  kExitConfig = 2,      // usage or configuration error; one `config: <reason>` line
  kExitNumerical = 3,   // numerical failure; outputs kept, manifest marked failed
};

/// Entry point of the `brm` tool. Human-readable results go to `out`,
/// warnings and the single-line error reason to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace brm
