#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fnreg {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 config/usage error, 2 data error, 3 numeric error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

} // namespace fnreg
