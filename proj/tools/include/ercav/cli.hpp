#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ercav::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

/// Runs one command line. Returns 0 on success, 1 for user errors, 2 for internal or IO failures.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ercav::cli
