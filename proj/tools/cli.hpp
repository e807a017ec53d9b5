#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace defreg::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kData = 2,
    kNumerical = 3,
};

// args excludes the program name: {"register", "a.pgm", "b.pgm", ...}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string content_hash(const std::string& path);

}  // namespace defreg::cli
