#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kenn::cli {

enum ExitCode : int { kOk = 0, kInvalid = 1, kFailed = 2 };

// Runs one `kenn` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kenn::cli
