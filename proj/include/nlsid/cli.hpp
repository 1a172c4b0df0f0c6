#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nlsid::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputRootEnv = "NLSID_OUTPUT_ROOT";

enum ExitCode : int { kOk = 0, kUsage = 1, kConfigError = 2, kNumericalError = 3 };

/// Run the `nlsid` command line. Never throws; failures map to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace nlsid::cli
