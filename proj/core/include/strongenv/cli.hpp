#pragma once

#include <iosfwd>

namespace strongenv {

// Entry point behind the `strongenv` binary; exposed so tests can drive the
// command line in-process.  Returns the process exit code:
//   0  success / all checks passed
//   1  a check failed or a computation error occurred
//   2  usage, config or argument parse error
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace strongenv
