#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bcopt/config.hpp"
#include "bcopt/error.hpp"

namespace bcopt {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_no_convergence = 2, exit_io = 3 };

int exit_code_for(ErrorCode code);

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides optimizer.seed
  std::ostream* log = nullptr;        // progress lines; nullptr is quiet
};

struct RunResult {
  int exit_code = exit_ok;
  std::string message;             // empty on success
  std::vector<std::string> files;  // written, relative to the output directory
};

/// solve-state, solve-adjoint, optimize, check-gradient, check-hessian,
/// convergence, diagnose.
const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its artifacts plus summary.txt into
/// out_dir (created if missing). Never throws; failures are reported via
/// the exit code and message, with whatever was computed still written.
RunResult run(const std::string& subcommand, const ProblemConfig& config, const std::string& out_dir,
              const RunOptions& options = {});

}  // namespace bcopt
