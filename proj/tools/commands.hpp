#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace docqa::cli {

// Default run directory when --out is not given.
inline constexpr const char* kOutDirEnv = "DOCQA_OUT_DIR";

// Runs one command line; `args` excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace docqa::cli
