#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs the command line with args[0] being the program name. Normal output
/// goes to `out`, usage text and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qc
