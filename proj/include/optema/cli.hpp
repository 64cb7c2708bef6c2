#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace optema::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kCheckFailure = 2,
  kDivergence = 3,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "OPTEMA_OUTPUT_DIR";

/// Entry point behind the `optema` tool. `args` excludes the program name.
/// Failures print one line `optema: error=<kind> reason="<text>"` to `err`.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace optema::cli
