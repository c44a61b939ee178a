#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hops::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Subcommands: eval, fuse, project, identify, synth, diff, info.
// Returns the process exit code: 0 success, 1 runtime or data error, 2 usage error.
int run(int argc, char** argv);

// Same as above; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hops::cli
