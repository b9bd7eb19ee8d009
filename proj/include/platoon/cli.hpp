#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace platoon::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kConfigError = 2,  // also bad command-line usage
  kSynthesisError = 3,
  kInstability = 4,
  kValidationFailed = 5,
};

/// Entry point shared by the executable and the tests. args[0] is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace platoon::cli
