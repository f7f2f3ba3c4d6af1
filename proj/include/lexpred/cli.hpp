#pragma once

#include <string>
#include <vector>

namespace lexpred::cli {

// Full command-line dispatch; `args` excludes the program name. Exit codes:
// 0 success, 1 usage error, 2 data/validation error, 3 numerical error.
int run(const std::vector<std::string>& args);

}  // namespace lexpred::cli
