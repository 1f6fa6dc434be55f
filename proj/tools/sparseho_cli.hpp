#pragma once

#include <string>
#include <vector>

namespace sparseho::cli {

// Exit codes: 0 success, 1 at least one method failed, 2 bad configuration.
int run(int argc, const char* const* argv);

// `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace sparseho::cli
