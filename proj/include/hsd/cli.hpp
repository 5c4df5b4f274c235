#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hsd::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kInvalidInput = 2;

// Runs one subcommand (detect, eval, train-nn, score-nn, synth, report).
// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsd::cli
