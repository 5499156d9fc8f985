#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace atmg::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kOk = 0,
  /// Invalid or missing input, bad flags, or a refused schedule.
  kInvalidInput = 1,
  /// The extension program was infeasible; report.json still carries diagnostics.
  kLpInfeasible = 2,
  /// verify: the policies are not an epsilon-approximate equilibrium.
  kNotEquilibrium = 3,
};

/**
 * Runs one command line (args[0] is the program name). Subcommands:
 *
 *   solve     --game PATH | --gridworld N, --out DIR and IPGmax settings
 *   verify    --game PATH --policies PATH --epsilon F
 *   gridworld --n N --out FILE
 *
 * Machine-readable output (verify's report) goes to `out`; diagnostics and
 * usage errors go to `err`. Log verbosity follows ATMG_LOG.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace atmg::cli
