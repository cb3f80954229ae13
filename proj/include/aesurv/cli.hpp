#pragma once

#include <string>
#include <vector>

namespace aesurv::cli {

/// Runs the tool on the given arguments (without the program name).
/// Exit status: 0 success, 1 validation/domain failure, 2 usage error.
int run(const std::vector<std::string>& args);

} // namespace aesurv::cli
