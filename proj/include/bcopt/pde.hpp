#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bcopt/geometry.hpp"
#include "bcopt/sparse.hpp"

namespace bcopt {

/// Nodal P1 coefficients (state, adjoint and sensitivities).
using NodalVector = std::vector<double>;
/// One value per triangle (controls, control directions, reduced gradient).
using CellVector = std::vector<double>;

enum class NonlinearityKind { zero, cubic, atan, linear_shift };

/// Reaction term a(x, y) with its first two y-derivatives and the lower
/// bound a0 of da/dy.
class Nonlinearity {
 public:
  Nonlinearity() = default;
  explicit Nonlinearity(NonlinearityKind kind, double shift = 0.0);

  /// Catalog lookup: "zero", "cubic", "atan", "linear_shift" (uses `shift`).
  static Nonlinearity from_label(const std::string& label, double shift = 0.0);

  double value(Point x, double y) const;
  double dy(Point x, double y) const;
  double dyy(Point x, double y) const;
  double a0(Point x) const;

  NonlinearityKind kind() const { return kind_; }
  double shift() const { return shift_; }
  std::string label() const;

 private:
  NonlinearityKind kind_ = NonlinearityKind::zero;
  double shift_ = 0.0;
};

/// Sampled check of the structural assumptions: finite-difference
/// consistency of dy, dy >= a0, and boundedness of dy, dyy on |y| <= 10.
/// Returns one message per violated property.
std::vector<std::string> check_nonlinearity(const Nonlinearity& nl,
                                            const std::vector<Point>& sample_points);

/// Right-hand side f. Either a constant, or the forcing that makes
/// amplitude * sin(pi x) sin(pi y) (on the unit square) the exact solution
/// for a given nonlinearity and constant control.
class Source {
 public:
  static Source constant(double value);
  static Source manufactured(const Nonlinearity& nl, double control, double amplitude);

  double operator()(Point x) const;
  /// Exact solution of the manufactured problem (zero for constants).
  double exact(Point x) const;
  std::array<double, 2> exact_gradient(Point x) const;
  bool is_manufactured() const { return manufactured_; }
  double value() const { return value_; }
  double amplitude() const { return amplitude_; }
  double control() const { return control_; }

 private:
  bool manufactured_ = false;
  double value_ = 0.0;
  double amplitude_ = 0.0;
  double control_ = 0.0;
  Nonlinearity nl_;
};

/// Pointwise tracking data: ordered interior points and their targets.
struct TrackingData {
  std::vector<Point> points;
  std::vector<double> targets;

  std::size_t size() const { return points.size(); }
};

struct LinearSolverSettings {
  double tol = 1e-12;
  int max_iter = 20000;
};

struct NewtonSettings {
  double tol = 1e-11;
  int max_iter = 50;
  int max_halvings = 10;
};

struct StateSolution {
  NodalVector y;
  int iterations = 0;
  std::vector<double> residual_history;  // sup-norm per iterate
};

class PdeSystem;

/// The operator K + M(da/dy(., y) + u) with Dirichlet rows and columns
/// eliminated, shared by the adjoint and all sensitivity solves at one
/// (u, y). Assembled once on construction.
class LinearizedOperator {
 public:
  const SparseMatrix& matrix() const { return matrix_; }
  const CellVector& control() const { return u_; }
  const NodalVector& state() const { return y_; }

  /// Solves A x = load (boundary entries of load are ignored).
  NodalVector solve(NodalVector load) const;
  int solve_count() const { return solve_count_; }

  /// Adjoint p: A p = sum_t (y(t) - y_t) phi(t).
  NodalVector solve_adjoint(const TrackingData& tracking) const;
  /// z = S'(u)h: A z = -(h y, v).
  NodalVector solve_linearized_state(const CellVector& h) const;
  /// gamma = S''(u)h1h2: A g = -(h1 z2 + h2 z1, v) - (a''(y) z1 z2, v).
  NodalVector solve_second_sensitivity(const CellVector& h1, const CellVector& h2,
                                       const NodalVector& z1, const NodalVector& z2) const;
  /// eta = Phi'(u)h: A e = sum_t z(t) phi(t) - ((a''(y) z + h) p, v).
  NodalVector solve_adjoint_sensitivity(const NodalVector& p, const CellVector& h,
                                        const NodalVector& z, const TrackingData& tracking) const;

 private:
  friend class PdeSystem;
  LinearizedOperator(const PdeSystem& system, CellVector u, NodalVector y, SparseMatrix matrix);

  const PdeSystem* system_;
  CellVector u_;
  NodalVector y_;
  SparseMatrix matrix_;
  mutable int solve_count_ = 0;
};

/// Discrete semilinear state equation on a fixed mesh:
///   (grad y, grad v) + (a(., y), v) + (u y, v) = (f, v)
/// with homogeneous Dirichlet conditions. All integrals except the stiffness
/// use the degree-2 rule with y interpolated at the quadrature points.
class PdeSystem {
 public:
  PdeSystem(std::shared_ptr<const Mesh> mesh, Nonlinearity nl, Source f,
            NewtonSettings newton = {}, LinearSolverSettings linear = {});

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  const Source& source() const { return f_; }
  const NewtonSettings& newton_settings() const { return newton_; }
  const LinearSolverSettings& linear_settings() const { return linear_; }

  /// Stiffness matrix without boundary elimination.
  const SparseMatrix& stiffness() const { return stiffness_; }

  /// Residual on free nodes (boundary entries zero).
  NodalVector residual(const NodalVector& y, const CellVector& u) const;
  /// Damped Newton from y = 0.
  StateSolution solve_state(const CellVector& u) const;
  /// Assembles the shared operator at (u, y).
  LinearizedOperator linearize(const CellVector& u, const NodalVector& y) const;

  /// Number of operator assemblies performed through linearize().
  int linearization_count() const { return linearizations_; }

  /// Symmetric solve with Dirichlet elimination; falls back to the direct
  /// solver if CG exhausts its budget.
  NodalVector solve_free(const SparseMatrix& a, NodalVector load) const;

  /// Weighted mass (w phi_i, phi_j) on the shared pattern, no elimination.
  /// `weights` holds one value per cell and quadrature point.
  SparseMatrix weighted_mass(const std::vector<std::array<double, 3>>& weights) const;
  /// Load (g, phi_i) for g given at the degree-2 quadrature points.
  NodalVector load(const std::vector<std::array<double, 3>>& values) const;
  /// Nodal field interpolated at the degree-2 quadrature points.
  std::vector<std::array<double, 3>> at_quadrature(const NodalVector& v) const;
  const std::vector<std::array<Point, 3>>& quadrature_points() const { return qpoints_; }

  /// K + M(w) with Dirichlet rows/columns replaced by the identity.
  SparseMatrix jacobian(const CellVector& u, const NodalVector& y) const;

 private:
  void zero_boundary(NodalVector& v) const;

  std::shared_ptr<const Mesh> mesh_;
  Nonlinearity nl_;
  Source f_;
  NewtonSettings newton_;
  LinearSolverSettings linear_;
  SparseMatrix stiffness_;
  std::vector<std::array<int, 9>> slots_;  // CSR slot of local (i, j) per cell
  std::vector<std::array<Point, 3>> qpoints_;
  std::vector<std::array<double, 3>> fq_;
  mutable int linearizations_ = 0;
};

SparseMatrix assemble_stiffness(const Mesh& mesh);
/// Mass matrix weighted by a cellwise constant.
SparseMatrix assemble_weighted_mass(const Mesh& mesh, const CellVector& w);
/// Mass matrix weighted by a P1 nodal field (degree-2 quadrature).
SparseMatrix assemble_weighted_mass_nodal(const Mesh& mesh, const NodalVector& w);

/// Sum_t coefficient_t * phi(t), boundary entries zeroed.
NodalVector dirac_combination(const Mesh& mesh, const std::vector<Point>& points,
                              const std::vector<double>& coefficients);

/// Nodal interpolant of a function.
template <class F>
NodalVector interpolate(const Mesh& mesh, F&& f) {
  NodalVector v(mesh.num_vertices());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(mesh.vertex(i));
  return v;
}

/// L2 norm of a nodal field (degree-3 rule).
double l2_norm(const Mesh& mesh, const NodalVector& v);
/// Cellwise L2 norm: sqrt(sum_c area_c h_c^2).
double l2_norm_cells(const Mesh& mesh, const CellVector& h);

}  // namespace bcopt
