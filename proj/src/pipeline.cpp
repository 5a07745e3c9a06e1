#include "bcopt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "bcopt/diagnostics.hpp"
#include "bcopt/io.hpp"

namespace bcopt {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::validation:
    case ErrorCode::point_outside_domain:
      return exit_validation;
    case ErrorCode::no_convergence:
    case ErrorCode::singular_matrix:
    case ErrorCode::nonlinearity_evaluation:
      return exit_no_convergence;
    case ErrorCode::io:
      return exit_io;
  }
  return exit_validation;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"solve-state",   "solve-adjoint", "optimize", "check-gradient",
                                              "check-hessian", "convergence",   "diagnose"};
  return names;
}

namespace {

// Ordered "key: value" lines written to summary.txt.
class Summary {
 public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_number(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

  void write(std::ostream& out) const {
    for (const auto& [k, v] : lines_) out << k << ": " << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

struct Context {
  const ProblemConfig& config;
  std::filesystem::path dir;
  std::ostream* log;
  std::uint64_t seed;
  Summary summary;
  std::vector<std::string> files;

  std::string path(const std::string& name) {
    files.push_back(name);
    return (dir / name).string();
  }
  void say(const std::string& line) const {
    if (log) *log << line << '\n';
  }
};

CellVector initial_cells(const ControlProblem& problem, const ProblemConfig& config) {
  if (config.control) return CellVector(problem.mesh().num_triangles(), *config.control);
  return problem.space->expand(default_initial_control(problem));
}

void write_triple(Context& ctx, const std::string& name, const Mesh& mesh, const KktTriple& t) {
  write_vtk_file(ctx.path(name), mesh, {{"y", t.y}, {"p", t.p}}, {{"u", t.u}, {"pbar", t.pbar}});
}

void add_tracking(Summary& s, const Mesh& mesh, const TrackingData& tracking, const NodalVector& y) {
  int active = 0;
  for (std::size_t k = 0; k < tracking.size(); ++k) {
    const double r = evaluate_at(mesh, y, tracking.points[k]) - tracking.targets[k];
    s.add("mismatch[" + std::to_string(k) + "]", r);
    if (std::abs(r) > 1e-10) ++active;
  }
  s.add("tracking_points", tracking.size());
  s.add("active_tracking_points", active);
}

void solve_state_cmd(Context& ctx) {
  const ControlProblem problem = build_problem(ctx.config);
  const CellVector u = initial_cells(problem, ctx.config);
  const StateSolution state = problem.pde->solve_state(u);
  write_vtk_file(ctx.path("state.vtk"), problem.mesh(), {{"y", state.y}}, {{"u", u}});
  CsvTable newton({"iteration", "residual"});
  for (std::size_t k = 0; k < state.residual_history.size(); ++k) {
    newton.row({static_cast<double>(k), state.residual_history[k]});
  }
  newton.write_file(ctx.path("newton.csv"));
  ctx.summary.add("newton_iterations", state.iterations);
  ctx.summary.add("newton_residual", state.residual_history.back());
  ctx.summary.add("y_max", *std::max_element(state.y.begin(), state.y.end()));
  ctx.summary.add("y_min", *std::min_element(state.y.begin(), state.y.end()));
  ctx.summary.add("cost", eval_cost(problem.mesh(), state.y, u, problem.tracking, problem.alpha));
  add_tracking(ctx.summary, problem.mesh(), problem.tracking, state.y);
}

void solve_adjoint_cmd(Context& ctx) {
  const ControlProblem problem = build_problem(ctx.config);
  const ReducedFunctional j(problem);
  const auto e = j.evaluate(initial_cells(problem, ctx.config));
  write_triple(ctx, "adjoint.vtk", problem.mesh(), e.triple);
  ctx.summary.add("newton_iterations", e.newton_iterations);
  ctx.summary.add("cost", e.cost);
  ctx.summary.add("p_sup", norm_inf(e.triple.p));
  add_tracking(ctx.summary, problem.mesh(), problem.tracking, e.triple.y);
}

int optimize_cmd(Context& ctx) {
  const ControlProblem problem = build_problem(ctx.config);
  const ReducedFunctional j(problem);
  OptimizerConfig oc = ctx.config.optimizer;
  oc.seed = ctx.seed;
  const OptimizationReport r = multistart_solve(j, oc);

  CsvTable history({"iteration", "cost", "residual", "step"});
  for (const IterationRecord& h : r.history) {
    history.row({static_cast<double>(h.iteration), h.cost, h.residual, h.step});
  }
  history.write_file(ctx.path("history.csv"));
  if (r.starts.size() > 1) {
    CsvTable starts({"start", "cost", "converged"});
    for (std::size_t s = 0; s < r.starts.size(); ++s) {
      starts.row({static_cast<double>(s), r.starts[s].first, r.starts[s].second ? 1.0 : 0.0});
    }
    starts.write_file(ctx.path("starts.csv"));
  }
  write_triple(ctx, "optimum.vtk", problem.mesh(), r.final.triple);
  if (!problem.space->is_cellwise()) {
    CsvTable groups({"group", "area", "u", "pbar"});
    for (std::size_t g = 0; g < r.control.size(); ++g) {
      groups.row({static_cast<double>(g), problem.space->area(g), r.control[g], r.group_pbar[g]});
    }
    groups.write_file(ctx.path("groups.csv"));
  }

  Summary& s = ctx.summary;
  s.add("converged", r.converged);
  s.add("stop_reason", r.stop_reason);
  s.add("iterations", r.history.size() - 1);
  s.add("start_index", r.start_index);
  s.add("starts", static_cast<int>(std::max<std::size_t>(1, r.starts.size())));
  s.add("seed", std::to_string(ctx.seed));
  s.add("cost", r.final.cost);
  s.add("projection_residual", r.residual);
  s.add("stop_tol", oc.stop_tol);
  s.add("u_min", *std::min_element(r.control.begin(), r.control.end()));
  s.add("u_max", *std::max_element(r.control.begin(), r.control.end()));
  add_tracking(s, problem.mesh(), problem.tracking, r.final.triple.y);

  const double tol = 10.0 * oc.stop_tol;
  const FirstOrderReport fo = check_first_order(r.control, r.group_pbar, problem.bounds, tol);
  s.add("first_order_tol", tol);
  s.add("first_order_at_lower", fo.at_lower);
  s.add("first_order_at_upper", fo.at_upper);
  s.add("first_order_interior", fo.interior);
  s.add("first_order_violations", fo.violations());
  s.add("first_order_max_violation", fo.max_violation);
  s.add("first_order_passed", fo.passed());

  const double tau = ctx.config.diagnostics.tau > 0.0 ? ctx.config.diagnostics.tau : tol;
  const CriticalConeMask mask = build_critical_cone_mask(r.control, r.group_pbar, problem.bounds, tau);
  const SecondOrderSample so = sample_second_order(j, r.final, mask, ctx.config.diagnostics.samples, ctx.seed);
  s.add("cone_tau", tau);
  s.add("cone_free", mask.count(ConeClass::free));
  s.add("cone_sign_constrained", mask.count(ConeClass::at_lower_sign_constrained) +
                                     mask.count(ConeClass::at_upper_sign_constrained));
  s.add("cone_forced_zero", mask.count(ConeClass::forced_zero));
  s.add("second_order_vacuous", so.vacuous);
  s.add("second_order_samples", so.samples);
  if (!so.vacuous) {
    s.add("second_order_min", so.min_value);
    s.add("second_order_nonnegative", so.min_value >= 0.0);
  }
  ctx.say(std::string("optimize: ") + (r.converged ? "converged" : "not converged") + " after " +
          std::to_string(r.history.size() - 1) + " iterations, cost " + format_number(r.final.cost));
  if (!r.converged) {
    s.add("status_detail", "optimizer did not converge: " + r.stop_reason);
    return exit_no_convergence;
  }
  return exit_ok;
}

// Random admissible (u, h) pairs for the FD checks: u stays at least
// max(eps) away from the box and the a0 floor, h in [-1, 1] per group.
struct FdPair {
  CellVector u, h, h2;
};

std::vector<FdPair> fd_pairs(const ControlProblem& problem, const ProblemConfig& config, std::uint64_t seed) {
  const double margin = *std::max_element(config.diagnostics.eps.begin(), config.diagnostics.eps.end());
  const Mesh& mesh = problem.mesh();
  std::vector<double> lo(problem.space->size(), problem.bounds.lower);
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    double& l = lo[problem.space->group_of(c)];
    l = std::max(l, -problem.pde->nonlinearity().a0(mesh.centroid(c)));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FdPair> pairs;
  for (int k = 0; k < config.diagnostics.pairs; ++k) {
    std::vector<double> u(lo.size()), h(lo.size()), h2(lo.size());
    for (std::size_t g = 0; g < u.size(); ++g) {
      const double a = lo[g] + margin, b = problem.bounds.upper - margin;
      if (!(a < b)) throw InvalidArgument("check: the box is too narrow for the largest eps in diagnostics.eps");
      u[g] = a + (b - a) * unit(rng);
    }
    for (double& x : h) x = 2.0 * unit(rng) - 1.0;
    for (double& x : h2) x = 2.0 * unit(rng) - 1.0;
    pairs.push_back({problem.space->expand(u), problem.space->expand(h), problem.space->expand(h2)});
  }
  return pairs;
}

void fd_cmd(Context& ctx, bool hessian) {
  const ControlProblem problem = build_problem(ctx.config);
  const ReducedFunctional j(problem);
  const auto& eps = ctx.config.diagnostics.eps;
  CsvTable table({"pair", "eps", "analytic", "fd", "rel_error"});
  CsvTable symmetry({"pair", "h1_h2", "h2_h1", "rel_difference"});
  double worst_best = 0.0, worst_order = INFINITY, worst_symmetry = 0.0;
  int flagged = 0;
  const auto pairs = fd_pairs(problem, ctx.config, ctx.seed);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const FdPair& p = pairs[k];
    const FdCheck c = hessian ? fd_hessian_check(j, p.u, p.h, eps) : fd_gradient_check(j, p.u, p.h, eps);
    for (const FdRow& row : c.rows) table.row({static_cast<double>(k), row.eps, c.analytic, row.fd, row.rel_error});
    worst_best = std::max(worst_best, c.best_error);
    worst_order = std::min(worst_order, c.best_order);
    if (!c.ok) ++flagged;
    if (hessian) {
      const auto at = j.evaluate(p.u);
      const double a = j.hessian_pair(at, p.h, p.h2), b = j.hessian_pair(at, p.h2, p.h);
      const double rel = std::abs(a - b) / (1.0 + std::abs(a));
      symmetry.row({static_cast<double>(k), a, b, rel});
      worst_symmetry = std::max(worst_symmetry, rel);
    }
  }
  const std::string name = hessian ? "hessian_check" : "gradient_check";
  table.write_file(ctx.path(name + ".csv"));
  if (hessian) symmetry.write_file(ctx.path("hessian_symmetry.csv"));
  ctx.summary.add("pairs", pairs.size());
  ctx.summary.add("seed", std::to_string(ctx.seed));
  ctx.summary.add("worst_best_rel_error", worst_best);
  ctx.summary.add("worst_best_order", worst_order);
  ctx.summary.add("pairs_without_eps_below_1e-4", flagged);
  if (hessian) ctx.summary.add("worst_symmetry_rel_difference", worst_symmetry);
  ctx.say(name + ": worst best-eps relative error " + format_number(worst_best));
}

void convergence_cmd(Context& ctx) {
  const DiagnosticsConfig& d = ctx.config.diagnostics;
  const ConvergenceTable t = manufactured_convergence_study(d.levels, manufactured_case_from_label(d.manufactured_case),
                                                            1.0, ctx.config.newton);
  CsvTable table({"n", "h_max", "error_l2", "error_h1", "rate_l2", "rate_h1"});
  for (const auto& r : t.rows) table.row({static_cast<double>(r.n), r.h_max, r.error_l2, r.error_h1, r.rate_l2, r.rate_h1});
  table.write_file(ctx.path("convergence.csv"));
  ctx.summary.add("case", d.manufactured_case);
  ctx.summary.add("finest_rate_l2", t.rows.back().rate_l2);
  ctx.summary.add("finest_rate_h1", t.rows.back().rate_h1);
  ctx.say("convergence: finest L2 rate " + format_number(t.rows.back().rate_l2));
}

void diagnose_cmd(Context& ctx) {
  const ProblemConfig& config = ctx.config;
  const DiagnosticsConfig& d = config.diagnostics;
  OptimizerConfig oc = config.optimizer;
  oc.seed = ctx.seed;
  Summary& s = ctx.summary;

  // adjoint singularity at the optimum
  const ControlProblem problem = build_problem(config);
  const ReducedFunctional j(problem);
  const OptimizationReport opt = multistart_solve(j, oc);
  s.add("optimum_converged", opt.converged);
  s.add("optimum_cost", opt.final.cost);
  CsvTable samples({"point", "rho", "mean_abs_p"});
  CsvTable fits({"point", "x", "y", "mismatch", "slope", "reference_slope", "intercept", "fit_residual"});
  for (std::size_t k = 0; k < problem.tracking.size(); ++k) {
    const Point t = problem.tracking.points[k];
    const double mismatch = evaluate_at(problem.mesh(), opt.final.triple.y, t) - problem.tracking.targets[k];
    // radii closer than 2 h_max to t or reaching the boundary are skipped
    std::vector<double> radii;
    const double dist = distance_to_boundary(problem.mesh(), t);
    for (double r : d.radii) {
      if (r >= 2.0 * problem.mesh().h_max() && r < dist) radii.push_back(r);
    }
    s.add("singularity_radii[" + std::to_string(k) + "]", radii.size());
    if (radii.size() < 2) continue;
    const SingularityFit f = adjoint_singularity_fit(problem.mesh(), opt.final.triple.p, t, mismatch, radii);
    for (std::size_t r = 0; r < f.radii.size(); ++r) {
      samples.row({static_cast<double>(k), f.radii[r], f.mean_abs_p[r]});
    }
    fits.row({static_cast<double>(k), t.x, t.y, mismatch, f.slope, f.reference_slope, f.intercept, f.fit_residual});
  }
  samples.write_file(ctx.path("singularity_samples.csv"));
  fits.write_file(ctx.path("singularity_fit.csv"));

  // control regularity over refinement
  std::function<ControlProblem(int)> make;
  std::vector<int> levels = d.regularity_levels;
  if (config.rectangle) {
    make = [&config](int n) {
      ProblemConfig c = config;
      c.mesh_n = n;
      return build_problem(c);
    };
  } else {
    levels = {config.mesh_n};
    make = [&problem](int) { return problem; };
  }
  const RegularityReport reg = control_regularity_probe(make, levels, oc, d.decay_radii);
  CsvTable regularity({"n", "h_max", "h1_seminorm", "lipschitz", "exclusion_radius", "cost", "residual", "converged"});
  for (const auto& l : reg.levels) {
    regularity.row({static_cast<double>(l.n), l.h_max, l.h1_seminorm, l.lipschitz, l.exclusion_radius, l.cost,
                    l.residual, l.converged ? 1.0 : 0.0});
  }
  regularity.write_file(ctx.path("regularity.csv"));
  CsvTable decay({"x", "y", "rho", "mean_abs_yp", "bound_ratio"});
  for (const auto& dd : reg.decay) decay.row({dd.t.x, dd.t.y, dd.rho, dd.mean_abs_yp, dd.bound_ratio});
  decay.write_file(ctx.path("decay.csv"));
  s.add("h1_bounded", reg.h1_bounded);
  s.add("decay_monotone", reg.decay_monotone);
  for (std::size_t k = 0; k < reg.lipschitz_ratios.size(); ++k) {
    s.add("lipschitz_ratio[" + std::to_string(k) + "]", reg.lipschitz_ratios[k]);
  }

  // stability of the state
  if (config.rectangle) {
    const Nonlinearity nl = Nonlinearity::from_label(config.nonlinearity, config.nonlinearity_c);
    const Source f = config.source.kind == "manufactured"
                         ? Source::manufactured(nl, config.source.control, config.source.amplitude)
                         : Source::constant(config.source.value);
    const double control = config.control ? *config.control : default_initial_control(problem).front();
    CsvTable stability({"n", "sup_norm", "h1_seminorm", "data_norm", "ratio"});
    for (const auto& r : stability_probe(nl, f, control, d.levels)) {
      stability.row({static_cast<double>(r.n), r.sup_norm, r.h1_seminorm, r.data_norm, r.ratio});
    }
    stability.write_file(ctx.path("stability.csv"));
  }
  ctx.say("diagnose: wrote singularity, regularity and stability tables");
}

}  // namespace

RunResult run(const std::string& subcommand, const ProblemConfig& config, const std::string& out_dir,
              const RunOptions& options) {
  RunResult result;
  Context ctx{config, out_dir, options.log, options.seed ? *options.seed : config.optimizer.seed, {}, {}};
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end()) {
    result.exit_code = exit_validation;
    result.message = "unknown subcommand '" + subcommand + "'";
    return result;
  }
  try {
    std::error_code ec;
    std::filesystem::create_directories(ctx.dir, ec);
    if (ec || !std::filesystem::is_directory(ctx.dir)) {
      throw IoError("cannot create output directory '" + out_dir + "'");
    }
  } catch (const IoError& e) {
    result.exit_code = exit_io;
    result.message = e.what();
    return result;
  }

  ctx.summary.add("subcommand", subcommand);
  try {
    if (subcommand == "solve-state") {
      solve_state_cmd(ctx);
    } else if (subcommand == "solve-adjoint") {
      solve_adjoint_cmd(ctx);
    } else if (subcommand == "optimize") {
      result.exit_code = optimize_cmd(ctx);
      if (result.exit_code != exit_ok) result.message = "optimize: optimizer did not converge";
    } else if (subcommand == "check-gradient") {
      fd_cmd(ctx, false);
    } else if (subcommand == "check-hessian") {
      fd_cmd(ctx, true);
    } else if (subcommand == "convergence") {
      convergence_cmd(ctx);
    } else {
      diagnose_cmd(ctx);
    }
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.code());
    result.message = subcommand + ": " + e.what();
  } catch (const std::exception& e) {
    result.exit_code = exit_validation;
    result.message = subcommand + ": internal error: " + e.what();
  }
  ctx.summary.add("exit_code", result.exit_code);
  if (!result.message.empty()) ctx.summary.add("error", result.message);
  try {
    std::ofstream out(ctx.path("summary.txt"));
    if (!out) throw IoError("cannot write summary.txt in '" + out_dir + "'");
    ctx.summary.write(out);
  } catch (const IoError& e) {
    if (result.exit_code == exit_ok) {
      result.exit_code = exit_io;
      result.message = e.what();
    }
  }
  result.files = ctx.files;
  return result;
}

}  // namespace bcopt
