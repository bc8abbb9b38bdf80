#pragma once

#include <string>
#include <vector>

namespace dualview::cli {

// Exit codes: 0 success, 1 strict-mode validation failure, 2 usage or input error.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace dualview::cli
