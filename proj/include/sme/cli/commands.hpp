#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace sme::cli {

enum ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kIo = 3,
  kNumeric = 4,
  kVerification = 5,
};

// Maps an exception to the stable exit-code contract.
int exit_code_for(const std::exception& e);

// Runs `sparse-sme <args...>` (args exclude the program name). Never throws;
// errors are reported on err and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sme::cli
