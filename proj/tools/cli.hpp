#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scpv::cli {

enum ExitCode { Ok = 0, Failure = 1, ConfigErr = 2, NoCertificate = 3, CrossCheckFailed = 4 };

/// Runs one scpverify invocation. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scpv::cli
