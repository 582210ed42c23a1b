#pragma once

#include <string>
#include <vector>

namespace gadmm {

// Entry point of the command-line tool. Returns the process exit code:
//   0  success
//   2  bad flags or violated preconditions (config conflicts, bad files, ...)
//   3  a solver run produced a non-finite iterate
//   4  a requested certificate failed
int cli_main(int argc, const char* const* argv);

// Convenience overload for tests; args exclude the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace gadmm
