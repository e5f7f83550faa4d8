#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bragg {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // run finished but a check or target failed
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitNumeric = 5;

/// args excludes the program name. Errors go to `err` as one JSON object.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, char** argv);

}  // namespace bragg
