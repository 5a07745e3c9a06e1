#include "bcopt/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "bcopt/error.hpp"

namespace bcopt {

// ---------------------------------------------------------------------------
// ControlSpace

ControlSpace::ControlSpace(const Mesh& mesh)
    : group_of_cell_(mesh.num_triangles()), cell_area_(mesh.num_triangles()) {
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    group_of_cell_[c] = static_cast<int>(c);
    cell_area_[c] = mesh.area(c);
  }
  group_area_ = cell_area_;
}

ControlSpace::ControlSpace(const Mesh& mesh, std::vector<int> group_of_cell)
    : group_of_cell_(std::move(group_of_cell)), cell_area_(mesh.num_triangles()), cellwise_(false) {
  if (group_of_cell_.size() != mesh.num_triangles()) {
    throw InvalidArgument("ControlSpace: group map size does not match triangle count");
  }
  int groups = 0;
  for (int g : group_of_cell_) {
    if (g < 0) throw InvalidArgument("ControlSpace: negative group index");
    groups = std::max(groups, g + 1);
  }
  group_area_.assign(groups, 0.0);
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    cell_area_[c] = mesh.area(c);
    group_area_[group_of_cell_[c]] += cell_area_[c];
  }
  for (double a : group_area_) {
    if (!(a > 0.0)) throw InvalidArgument("ControlSpace: empty control group");
  }
}

ControlSpace ControlSpace::blocks(const Mesh& mesh, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("ControlSpace::blocks: block counts must be >= 1");
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const Point& p : mesh.vertices()) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  std::vector<int> groups(mesh.num_triangles());
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const Point m = mesh.centroid(c);
    const int i = std::min(nx - 1, static_cast<int>((m.x - x0) / (x1 - x0) * nx));
    const int j = std::min(ny - 1, static_cast<int>((m.y - y0) / (y1 - y0) * ny));
    groups[c] = j * nx + i;
  }
  return ControlSpace(mesh, std::move(groups));
}

CellVector ControlSpace::expand(const std::vector<double>& v) const {
  if (v.size() != size()) throw InvalidArgument("ControlSpace::expand: size mismatch");
  CellVector cells(group_of_cell_.size());
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = v[group_of_cell_[c]];
  return cells;
}

std::vector<double> ControlSpace::average(const CellVector& cells) const {
  if (cellwise_) return cells;
  std::vector<double> out(size(), 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) out[group_of_cell_[c]] += cell_area_[c] * cells[c];
  for (std::size_t g = 0; g < out.size(); ++g) out[g] /= group_area_[g];
  return out;
}

double ControlSpace::inner(const std::vector<double>& a, const std::vector<double>& b) const {
  double s = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g) s += group_area_[g] * a[g] * b[g];
  return s;
}

double ControlSpace::norm(const std::vector<double>& v) const { return std::sqrt(inner(v, v)); }

// ---------------------------------------------------------------------------
// Free functions

double eval_cost(const Mesh& mesh, const NodalVector& y, const CellVector& u,
                 const TrackingData& tracking, double alpha) {
  double tracking_term = 0.0;
  for (std::size_t k = 0; k < tracking.size(); ++k) {
    const double r = evaluate_at(mesh, y, tracking.points[k]) - tracking.targets[k];
    tracking_term += r * r;
  }
  double reg = 0.0;
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) reg += u[c] * u[c] * mesh.area(c);
  return 0.5 * tracking_term + 0.5 * alpha * reg;
}

CellVector cell_average_product(const Mesh& mesh, const NodalVector& v, const NodalVector& w) {
  const QuadratureRule& rule = quadrature_rule(2);
  CellVector out(mesh.num_triangles(), 0.0);
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const Triangle& t = mesh.triangle(c);
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const double vq = l[0] * v[t[0]] + l[1] * v[t[1]] + l[2] * v[t[2]];
      const double wq = l[0] * w[t[0]] + l[1] * w[t[1]] + l[2] * w[t[2]];
      sum += 2.0 * rule.weights[q] * vq * wq;
    }
    out[c] = sum;
  }
  return out;
}

CellVector reduced_gradient(const Mesh& mesh, const CellVector& u, const NodalVector& y,
                            const NodalVector& p, double alpha) {
  CellVector pbar = cell_average_product(mesh, y, p);
  for (std::size_t c = 0; c < pbar.size(); ++c) pbar[c] = alpha * u[c] - pbar[c];
  return pbar;
}

std::vector<double> project_box(const std::vector<double>& v, Bounds bounds) {
  if (!(bounds.lower < bounds.upper)) {
    throw InvalidArgument("project_box: lower bound must be strictly below upper bound");
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::min(bounds.upper, std::max(bounds.lower, v[i]));
  }
  return out;
}

namespace {

// Lowest value each group may take so that a0 + u >= 0 holds on its cells.
std::vector<double> a0_floor(const ControlProblem& problem) {
  const ControlSpace& space = *problem.space;
  const Mesh& mesh = problem.mesh();
  std::vector<double> floor(space.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const double need = -problem.pde->nonlinearity().a0(mesh.centroid(c));
    double& f = floor[space.group_of(c)];
    f = std::max(f, need);
  }
  return floor;
}

}  // namespace

std::vector<double> default_initial_control(const ControlProblem& problem) {
  const double mid = 0.5 * (problem.bounds.lower + problem.bounds.upper);
  std::vector<double> v = a0_floor(problem);
  for (double& x : v) x = std::min(problem.bounds.upper, std::max(mid, x));
  return v;
}

// ---------------------------------------------------------------------------
// ReducedFunctional

ReducedFunctional::ReducedFunctional(ControlProblem problem) : problem_(std::move(problem)) {
  if (!problem_.pde) throw InvalidArgument("ReducedFunctional: missing PDE system");
  if (!(problem_.alpha > 0.0)) throw InvalidArgument("ReducedFunctional: alpha must be positive");
  if (!problem_.space) problem_.space = std::make_shared<ControlSpace>(problem_.mesh());
  if (problem_.tracking.points.size() != problem_.tracking.targets.size()) {
    throw InvalidArgument("ReducedFunctional: tracking points and targets differ in length");
  }
}

bool ReducedFunctional::in_a0_set(const CellVector& u) const {
  const Mesh& m = mesh();
  for (std::size_t c = 0; c < m.num_triangles(); ++c) {
    if (problem_.pde->nonlinearity().a0(m.centroid(c)) + u[c] < 0.0) return false;
  }
  return true;
}

double ReducedFunctional::cost(const CellVector& u) const {
  const StateSolution state = problem_.pde->solve_state(u);
  return eval_cost(mesh(), state.y, u, problem_.tracking, problem_.alpha);
}

ReducedFunctional::Evaluation ReducedFunctional::evaluate(const CellVector& u) const {
  Evaluation e;
  StateSolution state = problem_.pde->solve_state(u);
  e.newton_iterations = state.iterations;
  e.cost = eval_cost(mesh(), state.y, u, problem_.tracking, problem_.alpha);
  auto op = std::make_shared<LinearizedOperator>(problem_.pde->linearize(u, state.y));
  e.triple.u = u;
  e.triple.y = std::move(state.y);
  e.triple.p = op->solve_adjoint(problem_.tracking);
  e.triple.pbar = reduced_gradient(mesh(), u, e.triple.y, e.triple.p, problem_.alpha);
  e.op = std::move(op);
  return e;
}

double ReducedFunctional::derivative(const Evaluation& at, const CellVector& h) const {
  double s = 0.0;
  for (std::size_t c = 0; c < h.size(); ++c) s += at.triple.pbar[c] * h[c] * mesh().area(c);
  return s;
}

double ReducedFunctional::hessian_pair(const Evaluation& at, const CellVector& h1,
                                       const CellVector& h2) const {
  const LinearizedOperator& op = *at.op;
  const NodalVector z2 = op.solve_linearized_state(h2);
  const NodalVector eta2 = op.solve_adjoint_sensitivity(at.triple.p, h2, z2, problem_.tracking);
  const CellVector zp = cell_average_product(mesh(), z2, at.triple.p);
  const CellVector ye = cell_average_product(mesh(), at.triple.y, eta2);
  double s = 0.0;
  for (std::size_t c = 0; c < h1.size(); ++c) {
    s += h1[c] * mesh().area(c) * (problem_.alpha * h2[c] - zp[c] - ye[c]);
  }
  return s;
}

double ReducedFunctional::hessian_pair(const CellVector& u, const CellVector& h1,
                                       const CellVector& h2) const {
  return hessian_pair(evaluate(u), h1, h2);
}

// ---------------------------------------------------------------------------
// Optimality checks

FirstOrderReport check_first_order(const std::vector<double>& u, const std::vector<double>& pbar,
                                   Bounds bounds, double tol) {
  FirstOrderReport r;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] <= bounds.lower + tol) {
      ++r.at_lower;
      if (pbar[i] < -tol) {
        ++r.lower_violations;
        r.max_violation = std::max(r.max_violation, -pbar[i]);
      }
    } else if (u[i] >= bounds.upper - tol) {
      ++r.at_upper;
      if (pbar[i] > tol) {
        ++r.upper_violations;
        r.max_violation = std::max(r.max_violation, pbar[i]);
      }
    } else {
      ++r.interior;
      if (std::abs(pbar[i]) > tol) {
        ++r.interior_violations;
        r.max_violation = std::max(r.max_violation, std::abs(pbar[i]));
      }
    }
  }
  return r;
}

std::size_t CriticalConeMask::count(ConeClass c) const {
  return static_cast<std::size_t>(std::count(cls.begin(), cls.end(), c));
}

CriticalConeMask build_critical_cone_mask(const std::vector<double>& u,
                                          const std::vector<double>& pbar, Bounds bounds,
                                          double tau) {
  if (tau < 0.0) throw InvalidArgument("build_critical_cone_mask: tau must be >= 0");
  constexpr double machine = 1e-12;
  const double cut = tau > 0.0 ? tau : machine;
  const double at_tol_lo = machine * (1.0 + std::abs(bounds.lower));
  const double at_tol_hi = machine * (1.0 + std::abs(bounds.upper));
  CriticalConeMask mask;
  mask.tau = tau;
  mask.cls.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (std::abs(pbar[i]) > cut) {
      mask.cls[i] = ConeClass::forced_zero;
    } else if (u[i] <= bounds.lower + at_tol_lo) {
      mask.cls[i] = ConeClass::at_lower_sign_constrained;
    } else if (u[i] >= bounds.upper - at_tol_hi) {
      mask.cls[i] = ConeClass::at_upper_sign_constrained;
    } else {
      mask.cls[i] = ConeClass::free;
    }
  }
  return mask;
}

SecondOrderSample sample_second_order(const ReducedFunctional& functional,
                                      const ReducedFunctional::Evaluation& at,
                                      const CriticalConeMask& mask, int n_samples,
                                      std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("sample_second_order: n_samples must be >= 1");
  const ControlSpace& space = functional.space();
  if (mask.cls.size() != space.size()) {
    throw InvalidArgument("sample_second_order: mask size does not match the control space");
  }
  SecondOrderSample out;
  if (mask.empty_cone()) {
    out.vacuous = true;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  out.min_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> h(space.size());
    for (std::size_t g = 0; g < h.size(); ++g) {
      const double r = normal(rng);
      switch (mask.cls[g]) {
        case ConeClass::free:
          h[g] = r;
          break;
        case ConeClass::at_lower_sign_constrained:
          h[g] = std::abs(r);
          break;
        case ConeClass::at_upper_sign_constrained:
          h[g] = -std::abs(r);
          break;
        case ConeClass::forced_zero:
          h[g] = 0.0;
          break;
      }
    }
    const double n = space.norm(h);
    if (n == 0.0) continue;
    for (double& x : h) x /= n;
    const CellVector cells = space.expand(h);
    const double value = functional.hessian_pair(at, cells, cells);
    ++out.samples;
    if (value < out.min_value) {
      out.min_value = value;
      out.argmin = h;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

void validate(const OptimizerConfig& c) {
  std::vector<std::string> bad;
  if (!(c.armijo > 0.0 && c.armijo < 1.0)) bad.push_back("optimizer.armijo must lie in (0,1)");
  if (!(c.backtrack > 0.0 && c.backtrack < 1.0)) {
    bad.push_back("optimizer.backtrack must lie in (0,1)");
  }
  if (!(c.stop_tol > 0.0)) bad.push_back("optimizer.stop_tol must be positive");
  if (c.max_outer < 0) bad.push_back("optimizer.max_outer must be >= 0");
  if (c.max_backtracks < 1) bad.push_back("optimizer.max_backtracks must be >= 1");
  if (c.multistart < 1) bad.push_back("optimizer.multistart must be >= 1");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

namespace {
constexpr double kCostNoise = 1e-12;
}  // namespace

double projection_residual(const ControlSpace& space, const std::vector<double>& v,
                           const std::vector<double>& g, double alpha, Bounds bounds) {
  std::vector<double> target(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) target[i] = v[i] - g[i] / alpha;
  target = project_box(target, bounds);
  for (std::size_t i = 0; i < v.size(); ++i) target[i] = v[i] - target[i];
  return space.norm(target);
}

OptimizationReport projected_gradient_solve(const ReducedFunctional& functional,
                                            const OptimizerConfig& config,
                                            std::optional<std::vector<double>> initial) {
  validate(config);
  const ControlProblem& problem = functional.problem();
  const ControlSpace& space = functional.space();
  const double alpha = problem.alpha;
  const double s0 = config.initial_step > 0.0 ? config.initial_step : 1.0 / alpha;

  std::vector<double> v = initial ? *initial : default_initial_control(problem);
  if (v.size() != space.size()) {
    throw InvalidArgument("projected_gradient_solve: initial control has the wrong size");
  }
  OptimizationReport report;
  std::vector<double> residuals;
  const auto evaluate = [&](const std::vector<double>& w, int iteration) {
    try {
      return functional.evaluate(space.expand(w));
    } catch (const NoConvergence& e) {
      const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
      std::ostringstream msg;
      msg << "projected_gradient_solve: state solve failed at iteration " << iteration
          << " (control range [" << *lo << ", " << *hi << "], last cost "
          << (report.history.empty() ? 0.0 : report.history.back().cost) << "): " << e.what();
      throw NoConvergence(msg.str(), residuals);
    }
  };

  ReducedFunctional::Evaluation current = evaluate(v, 0);
  std::vector<double> g = space.average(current.triple.pbar);
  for (int k = 0;; ++k) {
    const double res = projection_residual(space, v, g, alpha, problem.bounds);
    residuals.push_back(res);
    report.history.push_back({k, current.cost, res, 0.0});
    if (res <= config.stop_tol) {
      report.converged = true;
      report.stop_reason = "projection residual below stop_tol";
      break;
    }
    if (k == config.max_outer) {
      report.stop_reason = "max_outer reached";
      break;
    }
    double step = s0;
    bool accepted = false;
    for (int b = 0; b < config.max_backtracks; ++b, step *= config.backtrack) {
      std::vector<double> trial(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) trial[i] = v[i] - step * g[i];
      trial = project_box(trial, problem.bounds);
      std::vector<double> d(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) d[i] = trial[i] - v[i];
      const double slope = space.inner(g, d);
      ReducedFunctional::Evaluation next = evaluate(trial, k + 1);
      const std::vector<double> g_next = space.average(next.triple.pbar);
      // Cost differences below round-off cannot be compared; there the
      // approximate Armijo test of Hager and Zhang uses the slope at the trial.
      const bool armijo = next.cost <= current.cost + config.armijo * slope;
      const bool approx = next.cost <= current.cost + kCostNoise * std::abs(current.cost) &&
                          space.inner(g_next, d) <= (2 * config.armijo - 1) * slope;
      if (slope < 0.0 && (armijo || approx)) {
        v = std::move(trial);
        current = std::move(next);
        g = g_next;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      report.stop_reason = "line search failed";
      break;
    }
    report.history.back().step = step;
  }
  report.residual = residuals.back();
  report.control = std::move(v);
  report.group_pbar = std::move(g);
  report.final = std::move(current);
  return report;
}

OptimizationReport multistart_solve(const ReducedFunctional& functional,
                                    const OptimizerConfig& config) {
  validate(config);
  const ControlProblem& problem = functional.problem();
  const std::vector<double> floor = a0_floor(problem);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::optional<OptimizationReport> best;
  std::vector<std::pair<double, bool>> starts;
  for (int s = 0; s < config.multistart; ++s) {
    std::optional<std::vector<double>> initial;
    if (s > 0) {
      std::vector<double> v(functional.space().size());
      for (std::size_t g = 0; g < v.size(); ++g) {
        const double lo = std::max(problem.bounds.lower, floor[g]);
        v[g] = lo + (problem.bounds.upper - lo) * unit(rng);
      }
      initial = std::move(v);
    }
    OptimizationReport r = projected_gradient_solve(functional, config, std::move(initial));
    r.start_index = s;
    starts.emplace_back(r.final.cost, r.converged);
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && r.final.cost < best->final.cost);
    if (better) best = std::move(r);
  }
  best->starts = std::move(starts);
  return std::move(*best);
}

}  // namespace bcopt
