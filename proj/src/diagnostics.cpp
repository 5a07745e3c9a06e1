#include "bcopt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bcopt/error.hpp"

namespace bcopt {

ManufacturedCase manufactured_case_from_label(const std::string& label) {
  if (label == "cubic") return ManufacturedCase::cubic;
  if (label == "linear") return ManufacturedCase::linear;
  if (label == "zero") return ManufacturedCase::zero;
  throw InvalidArgument("unknown manufactured case '" + label + "' (expected cubic, linear or zero)");
}

std::string to_string(ManufacturedCase c) {
  switch (c) {
    case ManufacturedCase::cubic:
      return "cubic";
    case ManufacturedCase::linear:
      return "linear";
    case ManufacturedCase::zero:
      return "zero";
  }
  return "unknown";
}

ConvergenceTable manufactured_convergence_study(const std::vector<int>& levels,
                                                ManufacturedCase problem, double amplitude,
                                                NewtonSettings newton) {
  if (levels.size() < 3) {
    throw InvalidArgument("manufactured_convergence_study: at least 3 levels are required");
  }
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    if (levels[k] < 1 || levels[k + 1] != 2 * levels[k]) {
      throw InvalidArgument("manufactured_convergence_study: each level must double n");
    }
  }
  Nonlinearity nl(NonlinearityKind::cubic);
  double control = 1.0;
  if (problem == ManufacturedCase::linear) {
    nl = Nonlinearity(NonlinearityKind::zero);
    control = 0.0;
  }
  if (problem == ManufacturedCase::zero) amplitude = 0.0;
  const Source f = Source::manufactured(nl, control, amplitude);
  const QuadratureRule& rule = quadrature_rule(3);

  ConvergenceTable table;
  table.problem = problem;
  for (int n : levels) {
    auto mesh = std::make_shared<Mesh>(build_structured_mesh(n));
    const PdeSystem system(mesh, nl, f, newton);
    StateSolution state;
    try {
      state = system.solve_state(CellVector(mesh->num_triangles(), control));
    } catch (const NoConvergence& e) {
      std::ostringstream msg;
      msg << "manufactured_convergence_study: level n = " << n << ": " << e.what();
      throw NoConvergence(msg.str(), e.residual_history());
    }
    double e2 = 0.0, g2 = 0.0;
    for (std::size_t c = 0; c < mesh->num_triangles(); ++c) {
      const Triangle& t = mesh->triangle(c);
      double gx = 0.0, gy = 0.0;
      for (int k = 0; k < 3; ++k) {
        gx += state.y[t[k]] * mesh->grad_lambda(c, k)[0];
        gy += state.y[t[k]] * mesh->grad_lambda(c, k)[1];
      }
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& l = rule.points[q];
        const Point x = mesh->map_to_physical(c, l);
        const double w = 2.0 * mesh->area(c) * rule.weights[q];
        const double d = l[0] * state.y[t[0]] + l[1] * state.y[t[1]] + l[2] * state.y[t[2]] - f.exact(x);
        const auto ge = f.exact_gradient(x);
        e2 += w * d * d;
        g2 += w * ((gx - ge[0]) * (gx - ge[0]) + (gy - ge[1]) * (gy - ge[1]));
      }
    }
    ConvergenceRow row{n, mesh->h_max(), std::sqrt(e2), std::sqrt(g2), 0.0, 0.0};
    if (!table.rows.empty()) {
      const ConvergenceRow& prev = table.rows.back();
      if (row.error_l2 > 0.0) row.rate_l2 = std::log2(prev.error_l2 / row.error_l2);
      if (row.error_h1 > 0.0) row.rate_h1 = std::log2(prev.error_h1 / row.error_h1);
    }
    table.rows.push_back(row);
  }
  return table;
}

namespace {

void check_admissible(const ReducedFunctional& functional, const CellVector& u, const CellVector& h,
                      double eps, const char* who) {
  const Bounds& b = functional.problem().bounds;
  const Mesh& mesh = functional.mesh();
  if (u.size() != mesh.num_triangles() || h.size() != u.size()) {
    throw InvalidArgument(std::string(who) + ": control and direction must have one value per cell");
  }
  for (double s : {eps, -eps, 0.0}) {
    for (std::size_t c = 0; c < u.size(); ++c) {
      const double v = u[c] + s * h[c];
      std::ostringstream msg;
      msg << who << ": u + (" << s << ") h on cell " << c << " equals " << v;
      if (v < b.lower) {
        msg << ", below the lower bound a = " << b.lower;
        throw InvalidArgument(msg.str());
      }
      if (v > b.upper) {
        msg << ", above the upper bound b = " << b.upper;
        throw InvalidArgument(msg.str());
      }
      const double a0 = functional.problem().pde->nonlinearity().a0(mesh.centroid(c));
      if (a0 + v < 0.0) {
        msg << ", violating a0 + u >= 0 (a0 = " << a0 << ")";
        throw InvalidArgument(msg.str());
      }
    }
  }
}

CellVector shifted(const CellVector& u, double eps, const CellVector& h) {
  CellVector v = u;
  for (std::size_t c = 0; c < v.size(); ++c) v[c] += eps * h[c];
  return v;
}

void finish(FdCheck& check, const std::vector<double>& eps_list) {
  check.best_error = check.rows.empty() ? 0.0 : check.rows.front().rel_error;
  for (const FdRow& r : check.rows) check.best_error = std::min(check.best_error, r.rel_error);
  for (std::size_t k = 0; k + 1 < check.rows.size(); ++k) {
    const double e0 = check.rows[k].rel_error, e1 = check.rows[k + 1].rel_error;
    if (e0 > 0.0 && e1 > 0.0) {
      check.best_order =
          std::max(check.best_order, std::log(e0 / e1) / std::log(eps_list[k] / eps_list[k + 1]));
    }
  }
  check.ok = check.best_error <= 1e-4;
}

void check_eps(const std::vector<double>& eps_list, const char* who) {
  if (eps_list.empty()) throw InvalidArgument(std::string(who) + ": eps list is empty");
  for (double e : eps_list) {
    if (!(e > 0.0)) throw InvalidArgument(std::string(who) + ": eps values must be positive");
  }
}

}  // namespace

FdCheck fd_gradient_check(const ReducedFunctional& functional, const CellVector& u,
                          const CellVector& h, const std::vector<double>& eps_list) {
  check_eps(eps_list, "fd_gradient_check");
  for (double eps : eps_list) check_admissible(functional, u, h, eps, "fd_gradient_check");
  FdCheck check;
  check.analytic = functional.derivative(functional.evaluate(u), h);
  for (double eps : eps_list) {
    const double fd =
        (functional.cost(shifted(u, eps, h)) - functional.cost(shifted(u, -eps, h))) / (2 * eps);
    check.rows.push_back({eps, fd, std::abs(check.analytic - fd) / (std::abs(check.analytic) + 1e-14)});
  }
  finish(check, eps_list);
  return check;
}

FdCheck fd_hessian_check(const ReducedFunctional& functional, const CellVector& u,
                         const CellVector& h, const std::vector<double>& eps_list) {
  check_eps(eps_list, "fd_hessian_check");
  for (double eps : eps_list) check_admissible(functional, u, h, eps, "fd_hessian_check");
  FdCheck check;
  const auto at = functional.evaluate(u);
  check.analytic = functional.hessian_pair(at, h, h);
  for (double eps : eps_list) {
    const double fd = (functional.cost(shifted(u, eps, h)) - 2 * at.cost +
                       functional.cost(shifted(u, -eps, h))) /
                      (eps * eps);
    check.rows.push_back({eps, fd, std::abs(check.analytic - fd) / (std::abs(check.analytic) + 1e-14)});
  }
  finish(check, eps_list);
  return check;
}

namespace {

constexpr int kAngles = 16;
constexpr double kInf = std::numeric_limits<double>::infinity();

double circle_mean(Point t, double rho, const std::function<double(Point)>& f) {
  double s = 0.0;
  for (int k = 0; k < kAngles; ++k) {
    const double th = 2.0 * std::numbers::pi * k / kAngles;
    s += f({t.x + rho * std::cos(th), t.y + rho * std::sin(th)});
  }
  return s / kAngles;
}

}  // namespace

SingularityFit adjoint_singularity_fit(const Mesh& mesh, const NodalVector& p, Point t,
                                       double mismatch, const std::vector<double>& radii) {
  if (radii.size() < 2) throw InvalidArgument("adjoint_singularity_fit: at least two radii are required");
  const double dist = distance_to_boundary(mesh, t);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0 && !(radii[k] < radii[k - 1])) {
      throw InvalidArgument("adjoint_singularity_fit: radii must be strictly decreasing");
    }
    if (radii[k] < 2.0 * mesh.h_max()) {
      std::ostringstream msg;
      msg << "adjoint_singularity_fit: radius " << radii[k] << " is below 2 h_max = " << 2.0 * mesh.h_max();
      throw InvalidArgument(msg.str());
    }
    if (radii[k] >= dist) {
      std::ostringstream msg;
      msg << "adjoint_singularity_fit: radius " << radii[k] << " exceeds the distance " << dist
          << " from t to the boundary";
      throw InvalidArgument(msg.str());
    }
  }
  SingularityFit fit;
  fit.t = t;
  fit.radii = radii;
  fit.reference_slope = std::abs(mismatch) / (2.0 * std::numbers::pi);
  const auto abs_p = [&](Point x) { return std::abs(evaluate_at(mesh, p, x)); };
  std::vector<double> xs;
  for (double rho : radii) {
    fit.mean_abs_p.push_back(circle_mean(t, rho, abs_p));
    xs.push_back(std::log(1.0 / rho));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k] / n;
    my += fit.mean_abs_p[k] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (fit.mean_abs_p[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double r2 = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = fit.mean_abs_p[k] - (fit.intercept + fit.slope * xs[k]);
    r2 += r * r;
  }
  fit.fit_residual = std::sqrt(r2 / n);
  return fit;
}

SingularityFit singularity_benchmark(int n, Point t, double mismatch, const std::vector<double>& radii) {
  auto mesh = std::make_shared<Mesh>(build_structured_mesh(n));
  const PdeSystem system(mesh, Nonlinearity(NonlinearityKind::zero), Source::constant(0.0));
  const CellVector u(mesh->num_triangles(), 0.0);
  const NodalVector y(mesh->num_vertices(), 0.0);
  const NodalVector p = system.linearize(u, y).solve_adjoint({{t}, {-mismatch}});
  return adjoint_singularity_fit(*mesh, p, t, mismatch, radii);
}

NodalVector nodal_interpolant(const Mesh& mesh, const CellVector& u) {
  NodalVector sum(mesh.num_vertices(), 0.0), weight(mesh.num_vertices(), 0.0);
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    for (int v : mesh.triangle(c)) {
      sum[v] += mesh.area(c) * u[c];
      weight[v] += mesh.area(c);
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= weight[i];
  return sum;
}

double h1_seminorm(const Mesh& mesh, const NodalVector& v) {
  double s = 0.0;
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const Triangle& t = mesh.triangle(c);
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      gx += v[t[k]] * mesh.grad_lambda(c, k)[0];
      gy += v[t[k]] * mesh.grad_lambda(c, k)[1];
    }
    s += mesh.area(c) * (gx * gx + gy * gy);
  }
  return std::sqrt(s);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<Point> mismatch_points(const ControlProblem& problem, const NodalVector& y) {
  std::vector<Point> out;
  for (std::size_t k = 0; k < problem.tracking.size(); ++k) {
    const Point t = problem.tracking.points[k];
    if (std::abs(evaluate_at(problem.mesh(), y, t) - problem.tracking.targets[k]) > 1e-10) {
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace

RegularityReport control_regularity_probe(const std::function<ControlProblem(int)>& make_problem,
                                          const std::vector<int>& levels,
                                          const OptimizerConfig& config,
                                          const std::vector<double>& decay_radii) {
  if (levels.empty()) throw InvalidArgument("control_regularity_probe: no levels given");
  RegularityReport report;
  ControlProblem finest;
  NodalVector y_finest, p_finest;
  for (int n : levels) {
    const ControlProblem problem = make_problem(n);
    const ReducedFunctional functional(problem);
    OptimizationReport opt;
    try {
      opt = multistart_solve(functional, config);
    } catch (const NoConvergence& e) {
      std::ostringstream msg;
      msg << "control_regularity_probe: level n = " << n << ": " << e.what();
      throw NoConvergence(msg.str(), e.residual_history());
    }
    const Mesh& mesh = problem.mesh();
    const CellVector& u = opt.final.triple.u;
    RegularityLevel level;
    level.n = n;
    level.h_max = mesh.h_max();
    level.h1_seminorm = h1_seminorm(mesh, nodal_interpolant(mesh, u));
    level.exclusion_radius = 2.0 * mesh.h_max();
    const std::vector<Point> centres = mismatch_points(problem, opt.final.triple.y);
    for (const auto& [c0, c1] : mesh.cell_neighbours()) {
      const Point a = mesh.centroid(c0), b = mesh.centroid(c1);
      bool excluded = false;
      for (const Point& t : centres) {
        if (distance(a, t) < level.exclusion_radius || distance(b, t) < level.exclusion_radius) {
          excluded = true;
        }
      }
      if (!excluded) level.lipschitz = std::max(level.lipschitz, std::abs(u[c0] - u[c1]) / distance(a, b));
    }
    level.cost = opt.final.cost;
    level.residual = opt.residual;
    level.converged = opt.converged;
    report.levels.push_back(level);
    finest = problem;
    y_finest = opt.final.triple.y;
    p_finest = opt.final.triple.p;
  }

  std::vector<double> h1;
  for (const RegularityLevel& l : report.levels) h1.push_back(l.h1_seminorm);
  report.h1_bounded = h1.back() <= 2.0 * median(h1);
  for (std::size_t k = 0; k + 1 < report.levels.size(); ++k) {
    const double a = report.levels[k].lipschitz, b = report.levels[k + 1].lipschitz;
    report.lipschitz_ratios.push_back(a > 0.0 ? b / a : (b > 0.0 ? kInf : 1.0));
  }

  const Mesh& mesh = finest.mesh();
  report.decay_monotone = true;
  for (const Point& t : mismatch_points(finest, y_finest)) {
    const double dist = distance_to_boundary(mesh, t);
    double previous = kInf;
    for (double rho : decay_radii) {
      if (rho >= dist) continue;
      const double m = circle_mean(t, rho, [&](Point x) {
        return std::abs(evaluate_at(mesh, y_finest, x) * evaluate_at(mesh, p_finest, x));
      });
      report.decay.push_back({t, rho, m, m / (rho * (std::abs(std::log(rho)) + 1.0))});
      if (!(m < previous)) report.decay_monotone = false;
      previous = m;
    }
  }
  return report;
}

std::vector<StabilityRow> stability_probe(const Nonlinearity& nl, const Source& f, double control,
                                          const std::vector<int>& levels) {
  std::vector<StabilityRow> rows;
  for (int n : levels) {
    auto mesh = std::make_shared<Mesh>(build_structured_mesh(n));
    const PdeSystem system(mesh, nl, f);
    const NodalVector y = system.solve_state(CellVector(mesh->num_triangles(), control)).y;
    const QuadratureRule& rule = quadrature_rule(3);
    double d2 = 0.0;
    for (std::size_t c = 0; c < mesh->num_triangles(); ++c) {
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Point x = mesh->map_to_physical(c, rule.points[q]);
        const double d = f(x) - nl.value(x, 0.0);
        d2 += 2.0 * mesh->area(c) * rule.weights[q] * d * d;
      }
    }
    StabilityRow row;
    row.n = n;
    row.sup_norm = norm_inf(y);
    row.h1_seminorm = h1_seminorm(*mesh, y);
    row.data_norm = std::sqrt(d2);
    row.ratio = row.data_norm > 0.0 ? row.sup_norm / row.data_norm : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bcopt
