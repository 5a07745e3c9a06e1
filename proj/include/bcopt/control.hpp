#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bcopt/pde.hpp"

namespace bcopt {

struct Bounds {
  double lower = 0.0;
  double upper = 1.0;
};

/// Piecewise-constant control space: cells are grouped and the control is
/// constant on each group. The default groups every triangle by itself.
class ControlSpace {
 public:
  explicit ControlSpace(const Mesh& mesh);
  ControlSpace(const Mesh& mesh, std::vector<int> group_of_cell);
  /// Groups cells by centroid into an nx x ny grid of blocks over the
  /// bounding box of the mesh.
  static ControlSpace blocks(const Mesh& mesh, int nx, int ny);

  std::size_t size() const { return group_area_.size(); }
  std::size_t num_cells() const { return group_of_cell_.size(); }
  bool is_cellwise() const { return cellwise_; }
  int group_of(std::size_t cell) const { return group_of_cell_[cell]; }
  double area(std::size_t g) const { return group_area_[g]; }

  CellVector expand(const std::vector<double>& v) const;
  /// Area-weighted group averages of a cell field.
  std::vector<double> average(const CellVector& cells) const;
  double inner(const std::vector<double>& a, const std::vector<double>& b) const;
  double norm(const std::vector<double>& v) const;

 private:
  std::vector<int> group_of_cell_;
  std::vector<double> cell_area_;
  std::vector<double> group_area_;
  bool cellwise_ = true;
};

/// Everything the reduced functional needs: PDE, tracking data, alpha,
/// box bounds and the control space.
struct ControlProblem {
  std::shared_ptr<const PdeSystem> pde;
  TrackingData tracking;
  double alpha = 1.0;
  Bounds bounds;
  std::shared_ptr<const ControlSpace> space;

  const Mesh& mesh() const { return pde->mesh(); }
};

/// (u, y, p) together with pbar = alpha u - cellavg(y p).
struct KktTriple {
  CellVector u;
  NodalVector y;
  NodalVector p;
  CellVector pbar;
};

/// 1/2 sum_t (y(t) - y_t)^2 + alpha/2 ||u||^2, the L2 norm exact for
/// cellwise controls.
double eval_cost(const Mesh& mesh, const NodalVector& y, const CellVector& u,
                 const TrackingData& tracking, double alpha);

/// Cell averages (1/|c|) int_c v w of two P1 fields (exact).
CellVector cell_average_product(const Mesh& mesh, const NodalVector& v, const NodalVector& w);

/// pbar_c = alpha u_c - (1/|c|) int_c y p. The pairing j'(u)h equals
/// sum_c pbar_c h_c |c| for cellwise h.
CellVector reduced_gradient(const Mesh& mesh, const CellVector& u, const NodalVector& y,
                            const NodalVector& p, double alpha);

/// min(b, max(a, v)) entrywise. Throws if a >= b.
std::vector<double> project_box(const std::vector<double>& v, Bounds bounds);

/// Smallest admissible initial control: (a + b)/2 per group, raised to
/// -a0 where needed so that a0 + u >= 0.
std::vector<double> default_initial_control(const ControlProblem& problem);

/// The reduced functional j(u) = J(S(u), u) and its derivatives.
class ReducedFunctional {
 public:
  /// State, adjoint, pbar and the shared operator at one control.
  struct Evaluation {
    KktTriple triple;
    double cost = 0.0;
    int newton_iterations = 0;
    std::shared_ptr<const LinearizedOperator> op;
  };

  explicit ReducedFunctional(ControlProblem problem);

  const ControlProblem& problem() const { return problem_; }
  const ControlSpace& space() const { return *problem_.space; }
  const Mesh& mesh() const { return problem_.mesh(); }

  /// Cost only (one state solve).
  double cost(const CellVector& u) const;
  Evaluation evaluate(const CellVector& u) const;

  /// j'(u)h for a cellwise direction.
  double derivative(const Evaluation& at, const CellVector& h) const;
  /// j''(u)(h1, h2) = int (alpha h2 - z2 p - y eta2) h1.
  double hessian_pair(const Evaluation& at, const CellVector& h1, const CellVector& h2) const;
  double hessian_pair(const CellVector& u, const CellVector& h1, const CellVector& h2) const;

  /// Checks a0 + u >= 0 on every cell.
  bool in_a0_set(const CellVector& u) const;

 private:
  ControlProblem problem_;
};

/// Per-cell (or per-group) sign check of the first-order conditions.
struct FirstOrderReport {
  int at_lower = 0;
  int at_upper = 0;
  int interior = 0;
  int lower_violations = 0;     // u = a with pbar < -tol
  int upper_violations = 0;     // u = b with pbar > tol
  int interior_violations = 0;  // a < u < b with |pbar| > tol
  double max_violation = 0.0;

  int violations() const { return lower_violations + upper_violations + interior_violations; }
  bool passed() const { return violations() == 0; }
};

/// A value within `tol` of a bound counts as active.
FirstOrderReport check_first_order(const std::vector<double>& u, const std::vector<double>& pbar,
                                   Bounds bounds, double tol);

enum class ConeClass { free, at_lower_sign_constrained, at_upper_sign_constrained, forced_zero };

struct CriticalConeMask {
  std::vector<ConeClass> cls;
  double tau = 0.0;

  std::size_t count(ConeClass c) const;
  bool empty_cone() const { return count(ConeClass::forced_zero) == cls.size(); }
};

/// forced_zero where |pbar| > tau (tau = 0 means |pbar| > 1e-12); otherwise
/// the bound activity of u decides the sign constraint.
CriticalConeMask build_critical_cone_mask(const std::vector<double>& u,
                                          const std::vector<double>& pbar, Bounds bounds,
                                          double tau);

struct SecondOrderSample {
  bool vacuous = false;
  int samples = 0;
  double min_value = 0.0;
  std::vector<double> argmin;  // in control-space coordinates, unit L2 norm
};

/// Minimum of j''(u)(h, h) over random unit directions in the (tau-)critical
/// cone. Deterministic for a fixed seed.
SecondOrderSample sample_second_order(const ReducedFunctional& functional,
                                      const ReducedFunctional::Evaluation& at,
                                      const CriticalConeMask& mask, int n_samples,
                                      std::uint64_t seed);

struct OptimizerConfig {
  double initial_step = 0.0;  // <= 0 selects 1/alpha
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  double stop_tol = 1e-8;
  int max_outer = 500;
  int multistart = 1;
  std::uint64_t seed = 0;
};

/// Throws InvalidArgument listing the offending parameter.
void validate(const OptimizerConfig& config);

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double residual = 0.0;
  double step = 0.0;  // step accepted after this record, 0 on the last row
};

struct OptimizationReport {
  std::vector<IterationRecord> history;
  ReducedFunctional::Evaluation final;
  std::vector<double> control;  // control-space coordinates
  std::vector<double> group_pbar;
  double residual = 0.0;
  bool converged = false;
  std::string stop_reason;
  int start_index = 0;
  /// (final cost, converged) of each start when multistart > 1.
  std::vector<std::pair<double, bool>> starts;
};

/// ||v - Pi(alpha^-1 avg(y p))||, i.e. ||v - Pi(v - g/alpha)|| with g the
/// group-averaged pbar.
double projection_residual(const ControlSpace& space, const std::vector<double>& v,
                           const std::vector<double>& g, double alpha, Bounds bounds);

/// Projected gradient with Armijo backtracking.
OptimizationReport projected_gradient_solve(const ReducedFunctional& functional,
                                            const OptimizerConfig& config,
                                            std::optional<std::vector<double>> initial = {});

/// Start 0 uses the default initial control, the others uniform random
/// admissible controls drawn from config.seed. Returns the best converged
/// run (lowest cost, ties by start index).
OptimizationReport multistart_solve(const ReducedFunctional& functional,
                                    const OptimizerConfig& config);

}  // namespace bcopt
