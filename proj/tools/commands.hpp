#ifndef FUNCIRC_TOOLS_COMMANDS_HPP
#define FUNCIRC_TOOLS_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace funcirc::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 2,
    kInfeasible = 3,
};

/// Runs the command line `args` (args[0] is the program name). Diagnostics go to `log`.
int run(const std::vector<std::string>& args, std::ostream& log);

}  // namespace funcirc::cli

#endif
