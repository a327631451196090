#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace surrogate::cli {

/// Exit statuses shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kNumeric = 3,
  kCompatibility = 4,
};

/// Environment variable naming the directory that relative output paths are
/// resolved against.
inline constexpr const char* kOutputDirEnv = "SURROGATE_OUTPUT_DIR";

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out`, diagnostics to `err`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `path` unchanged if absolute or if the output-directory variable is unset.
std::string resolve_output(const std::string& path);

}  // namespace surrogate::cli
