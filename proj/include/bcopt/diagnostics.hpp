#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bcopt/control.hpp"

namespace bcopt {

enum class ManufacturedCase { cubic, linear, zero };

ManufacturedCase manufactured_case_from_label(const std::string& label);
std::string to_string(ManufacturedCase c);

struct ConvergenceRow {
  int n = 0;
  double h_max = 0.0;
  double error_l2 = 0.0;
  double error_h1 = 0.0;  // H1 seminorm
  double rate_l2 = 0.0;   // against the previous row; 0 on the first
  double rate_h1 = 0.0;
};

struct ConvergenceTable {
  ManufacturedCase problem = ManufacturedCase::cubic;
  std::vector<ConvergenceRow> rows;
};

/// Errors of the discrete state against sin(pi x) sin(pi y) scaled by
/// `amplitude`. cubic: a = y^3, u = 1. linear: a = 0, u = 0. zero: cubic
/// with amplitude 0.
ConvergenceTable manufactured_convergence_study(const std::vector<int>& levels,
                                                ManufacturedCase problem, double amplitude = 1.0,
                                                NewtonSettings newton = {});

struct FdRow {
  double eps = 0.0;
  double fd = 0.0;
  double rel_error = 0.0;
};

struct FdCheck {
  double analytic = 0.0;
  std::vector<FdRow> rows;
  double best_error = 0.0;
  /// Largest observed order log(e_k/e_k+1)/log(eps_k/eps_k+1) over
  /// consecutive eps.
  double best_order = 0.0;
  /// Some eps reached a relative error <= 1e-4.
  bool ok = false;
};

/// Central difference (j(u+eh) - j(u-eh))/(2e) against j'(u)h. u + eps h
/// must stay in [a, b] and in the a0 set for every eps.
FdCheck fd_gradient_check(const ReducedFunctional& functional, const CellVector& u,
                          const CellVector& h, const std::vector<double>& eps_list);

/// Second difference (j(u+eh) - 2j(u) + j(u-eh))/e^2 against j''(u)(h,h).
FdCheck fd_hessian_check(const ReducedFunctional& functional, const CellVector& u,
                         const CellVector& h, const std::vector<double>& eps_list);

struct SingularityFit {
  Point t;
  std::vector<double> radii;
  std::vector<double> mean_abs_p;  // over 16 angles per radius
  double slope = 0.0;              // of mean |p| against log(1/rho)
  double intercept = 0.0;
  double fit_residual = 0.0;       // RMS
  double reference_slope = 0.0;    // |mismatch| / (2 pi)
};

/// Least-squares fit of |p| around t against log(1/rho). Radii must be
/// strictly decreasing, >= 2 h_max and inside the domain.
SingularityFit adjoint_singularity_fit(const Mesh& mesh, const NodalVector& p, Point t,
                                       double mismatch, const std::vector<double>& radii);

/// Linear benchmark: a = 0, u = 0, f = 0 on the unit square with n x n
/// cells, one tracking point t with y(t) - y_t = mismatch.
SingularityFit singularity_benchmark(int n, Point t, double mismatch,
                                     const std::vector<double>& radii);

struct DecaySample {
  Point t;
  double rho = 0.0;
  double mean_abs_yp = 0.0;
  double bound_ratio = 0.0;  // mean |y p| / (rho (|log rho| + 1))
};

struct RegularityLevel {
  int n = 0;
  double h_max = 0.0;
  double h1_seminorm = 0.0;
  double lipschitz = 0.0;  // max over neighbouring cells outside the balls
  double exclusion_radius = 0.0;
  double cost = 0.0;
  double residual = 0.0;
  bool converged = false;
};

struct RegularityReport {
  std::vector<RegularityLevel> levels;
  std::vector<DecaySample> decay;  // finest level
  /// final H1 seminorm <= 2 x median of the whole sequence
  bool h1_bounded = false;
  /// lipschitz[k+1] / lipschitz[k]
  std::vector<double> lipschitz_ratios;
  bool decay_monotone = false;
};

/// Nodal interpolant of a cellwise field: area-weighted average of the cells
/// around each vertex.
NodalVector nodal_interpolant(const Mesh& mesh, const CellVector& u);
/// |v|_{H1} of a P1 field.
double h1_seminorm(const Mesh& mesh, const NodalVector& v);

/// Optimizes on every level and measures the regularity indicators of the
/// discrete optimal control. Tracking points with |y(t) - y_t| > 1e-10 at the
/// finest optimum are the centres of the decay samples.
RegularityReport control_regularity_probe(const std::function<ControlProblem(int)>& make_problem,
                                          const std::vector<int>& levels,
                                          const OptimizerConfig& config,
                                          const std::vector<double>& decay_radii = {0.2, 0.1, 0.05});

struct StabilityRow {
  int n = 0;
  double sup_norm = 0.0;
  double h1_seminorm = 0.0;
  double data_norm = 0.0;  // ||f - a(., 0)||_L2
  double ratio = 0.0;      // sup_norm / data_norm
};

/// ||y||_inf and |y|_H1 against ||f - a(., 0)||_L2 over refinement.
std::vector<StabilityRow> stability_probe(const Nonlinearity& nl, const Source& f, double control,
                                          const std::vector<int>& levels);

}  // namespace bcopt
