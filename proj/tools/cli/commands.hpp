#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ttk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // data, format, state and numeric errors
inline constexpr int kExitUsage = 2;

// Parses `args` (without the program name) and runs the selected command.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ttk::cli
