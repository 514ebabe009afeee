#pragma once

namespace morpho {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitFormat = 3,
  kExitDimension = 4,
  kExitData = 5,
  kExitConfig = 6,
  kExitNumerical = 7,
};

/// Parses argv (argv[0] is the program name), runs one subcommand and returns
/// its exit code. Diagnostics go to stderr as "morpho: <kind> error: <message>".
int command_dispatch(int argc, const char* const* argv);

}  // namespace morpho
