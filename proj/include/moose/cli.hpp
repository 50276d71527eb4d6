#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace moose::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 1,
    kRunFailed = 2,
    kMissingArtifacts = 3,
    kUsage = 64,
};

/// Entry point shared by the `moose` binary and the tests. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace moose::cli
