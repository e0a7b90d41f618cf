#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ssnp::cli {

enum ExitCode : int {
    kOk = 0,
    kValidationError = 1,
    kRuntimeError = 2,
    kThresholdFailure = 3,
};

/// Entry point shared by the executable and the CLI tests. argv[0] is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssnp::cli
