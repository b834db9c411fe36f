#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace clickbait {

/// Entry point behind the `clickbait` executable. `args` excludes the program
/// name. Returns the process exit code: 0 on success, 1 when a gradient check
/// fails, 2 on any other error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clickbait
