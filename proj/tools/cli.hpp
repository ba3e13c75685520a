#pragma once

#include <iosfwd>

namespace h2cgl::cli {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Runs one subcommand. Results go to `out`, progress and diagnostics to `log`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace h2cgl::cli
