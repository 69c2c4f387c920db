#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stochgain::cli {

/// Runs the command line `args` (args[0] is the program name). Returns the
/// process exit status: 0 on success, 1 when classify finds the requested
/// criterion unstable, 2 on any error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Converts CSV text with a header line to {"columns": [...], "rows": [[...]]}.
/// Numeric fields become numbers, empty fields null, anything else a string.
std::string csv_to_json(const std::string& csv);

}  // namespace stochgain::cli
