#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bcopt/bcopt.h"

namespace {

const std::vector<std::string> kSubcommands{"solve-state",   "solve-adjoint", "optimize", "check-gradient",
                                            "check-hessian", "convergence",   "diagnose"};

constexpr int kExitValidation = 1;
constexpr int kExitIo = 3;

int exit_for_load(bcopt_status s) {
  switch (s) {
    case BCOPT_IO: return kExitIo;
    case BCOPT_NO_CONVERGENCE:
    case BCOPT_SINGULAR:
    case BCOPT_NONLINEARITY: return 2;
    default: return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilinear control of a semilinear elliptic equation with pointwise tracking"};
  app.set_version_flag("--version", std::string(bcopt_version()));
  app.require_subcommand(1, 1);

  std::string config, out = "out";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  for (const std::string& name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON problem file")->required();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides optimizer.seed");
    sub->add_flag("--quiet", quiet, "suppress progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  bcopt_problem* problem = nullptr;
  const bcopt_status s = bcopt_problem_from_file(config.c_str(), &problem);
  if (s != BCOPT_OK) {
    std::cerr << "error: " << bcopt_last_error() << '\n';
    return exit_for_load(s);
  }
  if (seed) bcopt_set_seed(problem, *seed);
  const int code = bcopt_run(problem, subcommand.c_str(), out.c_str(), quiet ? 1 : 0);
  if (code != 0) std::cerr << "error: " << bcopt_last_error() << '\n';
  bcopt_problem_destroy(problem);
  return code;
}
