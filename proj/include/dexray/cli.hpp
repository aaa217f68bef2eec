#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dexray::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

// Entry point for `dexray <subcommand> ...`; args excludes the program name.
// Subcommands: gen, split, preprocess, eval, bench.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dexray::cli
