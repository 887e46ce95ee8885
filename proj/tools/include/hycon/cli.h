#pragma once

#include <iosfwd>

namespace hycon {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitViolated = 2,
  kExitZeno = 3,
  kExitGrazing = 4,
  kExitRuntime = 5,
};

// Runs one command.  argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hycon
