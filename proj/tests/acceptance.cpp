// Runs acceptance criteria 1-11 and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bcopt/config.hpp"
#include "bcopt/diagnostics.hpp"
#include "bcopt/pipeline.hpp"

using namespace bcopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

ControlProblem make_problem(int n, Nonlinearity nl, double f, TrackingData tracking, double alpha, Bounds bounds) {
  auto mesh = std::make_shared<Mesh>(build_structured_mesh(n));
  ControlProblem p;
  p.pde = std::make_shared<PdeSystem>(mesh, nl, Source::constant(f));
  p.tracking = std::move(tracking);
  p.alpha = alpha;
  p.bounds = bounds;
  p.space = std::make_shared<ControlSpace>(*mesh);
  return p;
}

ControlProblem cubic_benchmark(int n) {
  return make_problem(n, Nonlinearity(NonlinearityKind::cubic), 20.0,
                      {{{0.3, 0.35}, {0.7, 0.6}, {0.45, 0.8}}, {0.4, 0.1, 0.9}}, 1e-3, {0.0, 3.0});
}

CellVector random_cells(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  CellVector v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double cell_norm(const Mesh& m, const CellVector& h) {
  double s = 0.0;
  for (std::size_t c = 0; c < m.num_triangles(); ++c) s += h[c] * h[c] * m.area(c);
  return std::sqrt(s);
}

OptimizerConfig optimizer(double stop_tol = 1e-9, int multistart = 1) {
  OptimizerConfig c;
  c.stop_tol = stop_tol;
  c.max_outer = 5000;
  c.multistart = multistart;
  c.seed = 17;
  return c;
}

// Benchmark suite shared by the KKT and second-order criteria.
struct Benchmark {
  std::string name;
  ControlProblem problem;
  OptimizerConfig config;
};

std::vector<Benchmark> benchmark_suite() {
  std::vector<Benchmark> s;
  s.push_back({"cubic n=16", cubic_benchmark(16), optimizer(1e-9, 3)});
  s.push_back({"atan n=16",
               make_problem(16, Nonlinearity(NonlinearityKind::atan), 10.0,
                            {{{0.25, 0.5}, {0.75, 0.5}}, {0.6, 0.2}}, 1e-2, {0.0, 2.0}),
               optimizer(1e-9, 2)});
  s.push_back({"linear_shift n=12",
               make_problem(12, Nonlinearity::from_label("linear_shift", 1.0), 8.0,
                            {{{0.5, 0.5}, {0.3, 0.7}}, {0.1, 0.5}}, 5e-2, {-0.5, 2.0}),
               optimizer(1e-10, 2)});
  {
    ControlProblem p = make_problem(2, Nonlinearity(NonlinearityKind::cubic), 30.0, {{{0.5, 0.5}}, {0.4}}, 0.05,
                                    {0.0, 2.0});
    p.space = std::make_shared<ControlSpace>(ControlSpace::blocks(p.mesh(), 2, 1));
    s.push_back({"two macro-cells", p, optimizer(1e-10, 4)});
  }
  return s;
}

Outcome criterion1() {
  const ConvergenceTable t = manufactured_convergence_study({8, 16, 32, 64}, ManufacturedCase::cubic);
  const ConvergenceRow& r = t.rows.back();
  const bool ok = r.rate_l2 >= 1.8 && r.rate_l2 <= 2.2 && r.rate_h1 >= 0.8 && r.rate_h1 <= 1.2;
  return {ok, "L2 rate " + fmt(r.rate_l2) + " in [1.8, 2.2], H1 rate " + fmt(r.rate_h1) + " in [0.8, 1.2]"};
}

Outcome criterion2() {
  const ReducedFunctional j(cubic_benchmark(16));
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  std::mt19937_64 rng(2);
  double worst_error = 0.0, worst_order = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const CellVector u = random_cells(j.mesh().num_triangles(), rng, 0.2, 2.8);
    const CellVector h = random_cells(j.mesh().num_triangles(), rng, -1.0, 1.0);
    const FdCheck c = fd_gradient_check(j, u, h, eps);
    worst_error = std::max(worst_error, c.best_error);
    worst_order = std::min(worst_order, c.best_order);
  }
  return {worst_error <= 1e-5 && worst_order >= 1.8,
          "20 pairs: worst best-eps error " + fmt(worst_error) + " <= 1e-5, worst order " + fmt(worst_order) +
              " >= 1.8"};
}

Outcome criterion3() {
  const ReducedFunctional j(cubic_benchmark(16));
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  std::mt19937_64 rng(3);
  double worst_fd = 0.0, worst_sym = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t n = j.mesh().num_triangles();
    const CellVector u = random_cells(n, rng, 0.2, 2.8);
    const CellVector h1 = random_cells(n, rng, -1.0, 1.0);
    const CellVector h2 = random_cells(n, rng, -1.0, 1.0);
    worst_fd = std::max(worst_fd, fd_hessian_check(j, u, h1, eps).best_error);
    const auto at = j.evaluate(u);
    const double a = j.hessian_pair(at, h1, h2), b = j.hessian_pair(at, h2, h1);
    worst_sym = std::max(worst_sym, std::abs(a - b) / std::abs(a));
  }
  return {worst_fd <= 1e-3 && worst_sym <= 1e-8,
          "10 pairs: worst best-eps error " + fmt(worst_fd) + " <= 1e-3, symmetry " + fmt(worst_sym) + " <= 1e-8"};
}

Outcome criterion4() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> pt(0.1, 0.9), tg(-0.5, 0.5);
  const Nonlinearity nls[] = {Nonlinearity(NonlinearityKind::cubic), Nonlinearity(NonlinearityKind::atan)};
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    auto mesh = std::make_shared<Mesh>(build_structured_mesh(8 + 2 * k));
    const PdeSystem s(mesh, nls[k % 2], Source::constant(5.0 + k));
    TrackingData tracking;
    for (int i = 0; i < 1 + k % 3; ++i) {
      tracking.points.push_back({pt(rng), pt(rng)});
      tracking.targets.push_back(tg(rng));
    }
    const CellVector u = random_cells(mesh->num_triangles(), rng, 0.0, 2.0);
    const CellVector h = random_cells(mesh->num_triangles(), rng, -1.0, 1.0);
    const NodalVector y = s.solve_state(u).y;
    const LinearizedOperator op = s.linearize(u, y);
    const NodalVector p = op.solve_adjoint(tracking);
    const NodalVector z = op.solve_linearized_state(h);
    double lhs = 0.0;
    for (std::size_t i = 0; i < tracking.size(); ++i) {
      lhs += (evaluate_at(*mesh, y, tracking.points[i]) - tracking.targets[i]) *
             evaluate_at(*mesh, z, tracking.points[i]);
    }
    const CellVector yp = cell_average_product(*mesh, y, p);
    double rhs = 0.0;
    for (std::size_t c = 0; c < mesh->num_triangles(); ++c) rhs -= h[c] * yp[c] * mesh->area(c);
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
  }
  return {worst <= 1e-10, "10 cases: worst relative gap " + fmt(worst) + " <= 1e-10"};
}

struct SuiteRun {
  std::string name;
  OptimizationReport report;
  ReducedFunctional functional;
  double stop_tol;
};

std::vector<SuiteRun>& suite_runs() {
  static std::vector<SuiteRun> runs = [] {
    std::vector<SuiteRun> r;
    for (Benchmark& b : benchmark_suite()) {
      ReducedFunctional j(b.problem);
      OptimizationReport rep = multistart_solve(j, b.config);
      r.push_back({b.name, std::move(rep), std::move(j), b.config.stop_tol});
    }
    return r;
  }();
  return runs;
}

Outcome criterion5() {
  int converged = 0;
  std::string failures;
  for (const SuiteRun& s : suite_runs()) {
    if (!s.report.converged) {
      failures += " [" + s.name + ": not converged]";
      continue;
    }
    ++converged;
    const double stop_tol = s.stop_tol;
    const FirstOrderReport fo =
        check_first_order(s.report.control, s.report.group_pbar, s.functional.problem().bounds, 10.0 * stop_tol);
    const double res = projection_residual(s.functional.space(), s.report.control, s.report.group_pbar,
                                           s.functional.problem().alpha, s.functional.problem().bounds);
    if (!fo.passed() || res > stop_tol) {
      failures += " [" + s.name + ": " + std::to_string(fo.violations()) + " violations, residual " + fmt(res) + "]";
    }
  }
  const bool ok = failures.empty() && converged > 0;
  return {ok, std::to_string(converged) + " converged optimize runs, all stationary" + failures};
}

Outcome criterion6() {
  ControlProblem problem = make_problem(2, Nonlinearity(NonlinearityKind::cubic), 30.0, {{{0.5, 0.5}}, {0.4}}, 0.05,
                                        {0.0, 2.0});
  problem.space = std::make_shared<ControlSpace>(ControlSpace::blocks(problem.mesh(), 2, 1));
  const ReducedFunctional j(problem);
  const OptimizationReport r = multistart_solve(j, optimizer(1e-10, 4));
  double best = std::numeric_limits<double>::infinity();
  const double step = (problem.bounds.upper - problem.bounds.lower) / 200.0;
  for (int a = 0; a <= 200; ++a) {
    for (int b = 0; b <= 200; ++b) {
      best = std::min(best, j.cost(problem.space->expand(
                                {problem.bounds.lower + step * a, problem.bounds.lower + step * b})));
    }
  }
  const double gap = std::abs(r.final.cost - best);
  return {r.converged && gap <= 1e-5,
          "optimizer j " + fmt(r.final.cost, 12) + ", grid j " + fmt(best, 12) + ", gap " + fmt(gap) + " <= 1e-5"};
}

Outcome criterion7() {
  // targets hit exactly: the adjoint forcing vanishes
  const ControlProblem base = cubic_benchmark(16);
  const CellVector u(base.mesh().num_triangles(), 1.0);
  const NodalVector y = base.pde->solve_state(u).y;
  ControlProblem hit = base;
  for (std::size_t k = 0; k < hit.tracking.size(); ++k) {
    hit.tracking.targets[k] = evaluate_at(hit.mesh(), y, hit.tracking.points[k]);
  }
  const double p_hit = norm_inf(ReducedFunctional(hit).evaluate(u).triple.p);

  // no tracking points and 0 in (a, b)
  const ControlProblem none = make_problem(16, Nonlinearity::from_label("linear_shift", 1.0), 5.0, {}, 0.1,
                                           {-1.0, 1.0});
  const ReducedFunctional j(none);
  const OptimizationReport r = multistart_solve(j, optimizer(1e-12));
  const double u_sup = norm_inf(r.final.triple.u);
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    CellVector h = random_cells(none.mesh().num_triangles(), rng, -1.0, 1.0);
    const double n = cell_norm(none.mesh(), h);
    for (double& v : h) v /= n;
    worst = std::max(worst, std::abs(j.hessian_pair(r.final, h, h) - none.alpha) / none.alpha);
  }
  const bool ok = p_hit <= 1e-12 && r.converged && u_sup == 0.0 && worst <= 1e-14;
  return {ok, "targets met: |p| " + fmt(p_hit) + "; no tracking: |u| " + fmt(u_sup) +
                  ", max |j''(h,h) - alpha|/alpha " + fmt(worst) + " over 10 unit h"};
}

Outcome criterion8() {
  const std::vector<double> radii{0.2, 0.1, 0.05, 0.025};
  const SingularityFit f1 = singularity_benchmark(128, {0.5, 0.5}, 1.0, radii);
  const SingularityFit f2 = singularity_benchmark(128, {0.5, 0.5}, 2.0, radii);
  const double rel = std::abs(f1.slope - f1.reference_slope) / f1.reference_slope;
  const double scale = std::abs(f2.slope / f1.slope - 2.0) / 2.0;
  return {rel <= 0.15 && scale <= 0.02, "slope " + fmt(f1.slope, 4) + " vs 1/(2 pi) = " + fmt(f1.reference_slope, 4) +
                                            " (rel " + fmt(rel) + " <= 0.15), mismatch scaling off by " + fmt(scale) +
                                            " <= 0.02"};
}

Outcome criterion9() {
  std::string detail, failures;
  int checked = 0;
  for (const SuiteRun& s : suite_runs()) {
    if (!s.report.converged) continue;
    const CriticalConeMask mask = build_critical_cone_mask(s.report.control, s.report.group_pbar,
                                                           s.functional.problem().bounds, 10.0 * s.stop_tol);
    const SecondOrderSample so = sample_second_order(s.functional, s.report.final, mask, 200, 9);
    ++checked;
    if (so.vacuous) {
      detail += " " + s.name + ": cone {0};";
      continue;
    }
    detail += " " + s.name + ": mu " + fmt(so.min_value) + ";";
    if (!(so.min_value > 0.0)) failures += " [" + s.name + "]";
  }
  return {failures.empty() && checked > 0, "200 samples per optimum," + detail + failures};
}

Outcome criterion10() {
  OptimizerConfig config = optimizer(1e-9);
  const RegularityReport r = control_regularity_probe(cubic_benchmark, {16, 32, 64}, config);
  std::vector<double> s;
  std::string values;
  for (const auto& l : r.levels) {
    s.push_back(l.h1_seminorm);
    values += (values.empty() ? "" : ", ") + fmt(l.h1_seminorm);
  }
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  return {s.back() <= 2.0 * median, "|u_h|_H1 over n = 16, 32, 64: " + values + "; final <= 2 x median " + fmt(median)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome criterion11() {
  const auto root = std::filesystem::temp_directory_path() / "bcopt_acceptance_determinism";
  std::filesystem::remove_all(root);
  ProblemConfig config = parse_config_text(R"({
    "mesh_n": 12,
    "source": {"kind": "constant", "value": 20},
    "tracking": [{"point": [0.3, 0.35], "target": 0.4}, {"point": [0.7, 0.6], "target": 0.1}],
    "alpha": 0.005,
    "bounds": [0, 3],
    "optimizer": {"stop_tol": 1e-9, "max_outer": 2000, "multistart": 3, "seed": 21},
    "diagnostics": {"pairs": 4, "levels": [4, 8, 16], "regularity_levels": [8, 16], "radii": [0.25, 0.2]}
  })");
  int compared = 0;
  std::string diffs;
  for (const std::string sub : {"optimize", "check-gradient", "check-hessian", "convergence", "diagnose"}) {
    const RunResult a = run(sub, config, (root / sub / "a").string());
    const RunResult b = run(sub, config, (root / sub / "b").string());
    if (a.exit_code != 0 || b.exit_code != 0) diffs += " [" + sub + " exit " + std::to_string(a.exit_code) + "]";
    for (const std::string& f : a.files) {
      if (f.size() < 4 || f.substr(f.size() - 4) != ".csv") continue;
      ++compared;
      if (slurp(root / sub / "a" / f) != slurp(root / sub / "b" / f)) diffs += " [" + sub + "/" + f + "]";
    }
  }
  std::filesystem::remove_all(root);
  return {diffs.empty() && compared > 0, std::to_string(compared) + " CSV files bit-identical across two runs" + diffs};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::function<Outcome()> run;
    double budget;  // seconds; 0 means no runtime target
  };
  const std::vector<Criterion> criteria{
      {1, criterion1, 30},  {2, criterion2, 60},  {3, criterion3, 60}, {4, criterion4, 0},
      {5, criterion5, 0},   {6, criterion6, 120}, {7, criterion7, 0},  {8, criterion8, 120},
      {9, criterion9, 0},   {10, criterion10, 0}, {11, criterion11, 0}};
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget > 0 && seconds > c.budget) {
      o.pass = false;
      o.detail += "; runtime over " + fmt(c.budget) + " s";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d: %s  %s  (%.2f s)\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failed;
}
