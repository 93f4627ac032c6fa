#pragma once
// Command-line entry point: gen / train / eval / infer / gradcheck.
// Exit codes: 0 ok, 1 missing input, 2 bad flags, 3 training divergence,
// 4 gradcheck failure.

#include <string>
#include <vector>

namespace copse::cli {

int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace copse::cli
