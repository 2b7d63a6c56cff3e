#ifndef ACCMV_CLI_HPP
#define ACCMV_CLI_HPP

#include "accmv/errors.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace accmv {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitArgument = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitFit = 4,
  kExitInference = 5,
  kExitVerification = 6,
};

[[nodiscard]] int exit_code_for(ErrorCategory category);

/// Entry point of the `accmv` tool; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace accmv

#endif  // ACCMV_CLI_HPP
