#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace divens::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFormat = 1;
inline constexpr int kExitDimension = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitInvalidArgument = 4;
inline constexpr int kExitIo = 5;
inline constexpr int kExitUsage = 64;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace divens::cli
