#pragma once

#include <iosfwd>

namespace hybridjd {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_numerical = 2 };

/// Entry point of the hybridjd command-line tool. CSV goes to `out` (or the
/// --output file), messages to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hybridjd
