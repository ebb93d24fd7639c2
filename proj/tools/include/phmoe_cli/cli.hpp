#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phmoe::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUserError = 2;
inline constexpr int kNumericalError = 3;

/// Runs the command line `args` (args[0] is the program name). Data goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phmoe::cli
