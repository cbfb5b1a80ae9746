#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace coherence::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitCapExceeded = 4;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coherence::cli
