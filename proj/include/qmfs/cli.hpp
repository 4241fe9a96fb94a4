#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qmfs::cli {

inline constexpr const char* tool_version = "0.1.0";

enum ExitCode : int {
    ok = 0,
    config_error = 1,
    instability = 2,
    numerical_failure = 3,
};

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

} // namespace qmfs::cli
