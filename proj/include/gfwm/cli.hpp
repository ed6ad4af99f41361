// Command-line front end. Subcommands: quadtable, apriori, bench, coupled,
// gradtest. A `--config <path>` file of `key = value` lines (with
// `[subcommand]` sections) fills options the command line leaves unset; CSV
// outputs land in --output-dir, the GFWM_OUTPUT_DIR environment variable, or
// the working directory, in that order of precedence.

#ifndef GFWM_CLI_HPP
#define GFWM_CLI_HPP

#include <string>
#include <vector>

namespace gfwm::cli {

// Exit codes: 0 success, 1 validation or runtime failure (including a failing
// gradtest report), 2 usage error.
int dispatch(int argc, const char* const* argv);

// Convenience for in-process callers: args without the program name.
int dispatch(const std::vector<std::string>& args);

}  // namespace gfwm::cli

#endif
