#ifndef FLAPFOIL_TOOLS_COMMANDS_HPP_
#define FLAPFOIL_TOOLS_COMMANDS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace flapfoil::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

// Entry point of the `flapfoil` executable; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flapfoil::cli

#endif  // FLAPFOIL_TOOLS_COMMANDS_HPP_
