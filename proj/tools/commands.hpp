#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hbp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIoError = 2,
  kVerifyFailed = 3,
  kNetworkError = 4,
};

// Parses argv (argv[0] is the program name) and runs the selected
// subcommand. Normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hbp::cli
