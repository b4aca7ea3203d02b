#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specloop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `specloop` tool; args exclude the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specloop
