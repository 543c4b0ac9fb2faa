#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dsd::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

// Runs one command line (args[0] is the program name). Results go to `out`,
// diagnostics and logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsd::cli
