#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace topogen::cli {

// Exit codes: 0 success, 1 topology or I/O error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topogen::cli
