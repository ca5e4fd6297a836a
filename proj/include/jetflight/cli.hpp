#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jetflight::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageOrIo = 1,
  kValidation = 2,
  kBlowUp = 3,
  kInfeasible = 4,
};

/// Environment variable naming the default output root of `simulate`.
inline constexpr const char* kOutputRootEnv = "JETFLIGHT_OUTPUT_ROOT";

/// Runs the `jetflight` command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jetflight::cli
