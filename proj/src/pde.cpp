#include "bcopt/pde.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bcopt/error.hpp"

namespace bcopt {

namespace {

constexpr double pi = std::numbers::pi;

const QuadratureRule& mass_rule() { return quadrature_rule(2); }

}  // namespace

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity::Nonlinearity(NonlinearityKind kind, double shift) : kind_(kind), shift_(shift) {}

Nonlinearity Nonlinearity::from_label(const std::string& label, double shift) {
  if (label == "zero") return Nonlinearity(NonlinearityKind::zero);
  if (label == "cubic") return Nonlinearity(NonlinearityKind::cubic);
  if (label == "atan") return Nonlinearity(NonlinearityKind::atan);
  if (label == "linear_shift") return Nonlinearity(NonlinearityKind::linear_shift, shift);
  throw InvalidArgument("unknown nonlinearity label '" + label + "'");
}

std::string Nonlinearity::label() const {
  switch (kind_) {
    case NonlinearityKind::zero:
      return "zero";
    case NonlinearityKind::cubic:
      return "cubic";
    case NonlinearityKind::atan:
      return "atan";
    case NonlinearityKind::linear_shift:
      return "linear_shift";
  }
  return "unknown";
}

double Nonlinearity::value(Point, double y) const {
  switch (kind_) {
    case NonlinearityKind::zero:
      return 0.0;
    case NonlinearityKind::cubic:
      return y * y * y;
    case NonlinearityKind::atan:
      return std::atan(y);
    case NonlinearityKind::linear_shift:
      return shift_ * y;
  }
  return 0.0;
}

double Nonlinearity::dy(Point, double y) const {
  switch (kind_) {
    case NonlinearityKind::zero:
      return 0.0;
    case NonlinearityKind::cubic:
      return 3.0 * y * y;
    case NonlinearityKind::atan:
      return 1.0 / (1.0 + y * y);
    case NonlinearityKind::linear_shift:
      return shift_;
  }
  return 0.0;
}

double Nonlinearity::dyy(Point, double y) const {
  switch (kind_) {
    case NonlinearityKind::zero:
    case NonlinearityKind::linear_shift:
      return 0.0;
    case NonlinearityKind::cubic:
      return 6.0 * y;
    case NonlinearityKind::atan:
      return -2.0 * y / ((1.0 + y * y) * (1.0 + y * y));
  }
  return 0.0;
}

double Nonlinearity::a0(Point) const {
  return kind_ == NonlinearityKind::linear_shift ? shift_ : 0.0;
}

std::vector<std::string> check_nonlinearity(const Nonlinearity& nl,
                                            const std::vector<Point>& sample_points) {
  std::vector<std::string> violations;
  constexpr int samples = 201;
  constexpr double y_max = 10.0, step = 1e-5;
  bool fd_ok = true, fd2_ok = true, lower_ok = true, finite_ok = true;
  for (const Point& x : sample_points) {
    for (int k = 0; k < samples; ++k) {
      const double y = -y_max + 2.0 * y_max * k / (samples - 1);
      const double d = nl.dy(x, y), dd = nl.dyy(x, y);
      if (!std::isfinite(nl.value(x, y)) || !std::isfinite(d) || !std::isfinite(dd)) {
        finite_ok = false;
        continue;
      }
      const double fd = (nl.value(x, y + step) - nl.value(x, y - step)) / (2.0 * step);
      if (std::abs(fd - d) > 1e-6 * std::max(1.0, std::abs(d))) fd_ok = false;
      const double fd2 = (nl.dy(x, y + step) - nl.dy(x, y - step)) / (2.0 * step);
      if (std::abs(fd2 - dd) > 1e-6 * std::max(1.0, std::abs(dd))) fd2_ok = false;
      if (d < nl.a0(x) - 1e-14) lower_ok = false;
    }
  }
  const std::string name = "nonlinearity '" + nl.label() + "': ";
  if (!finite_ok) violations.push_back(name + "non-finite value or derivative on |y| <= 10");
  if (!fd_ok) violations.push_back(name + "da/dy inconsistent with finite differences of a");
  if (!fd2_ok) violations.push_back(name + "d2a/dy2 inconsistent with finite differences of da/dy");
  if (!lower_ok) violations.push_back(name + "da/dy falls below the lower bound a0");
  return violations;
}

// ---------------------------------------------------------------------------
// Source

Source Source::constant(double value) {
  Source s;
  s.value_ = value;
  return s;
}

Source Source::manufactured(const Nonlinearity& nl, double control, double amplitude) {
  Source s;
  s.manufactured_ = true;
  s.nl_ = nl;
  s.control_ = control;
  s.amplitude_ = amplitude;
  return s;
}

double Source::exact(Point x) const {
  if (!manufactured_) return 0.0;
  return amplitude_ * std::sin(pi * x.x) * std::sin(pi * x.y);
}

std::array<double, 2> Source::exact_gradient(Point x) const {
  if (!manufactured_) return {0.0, 0.0};
  return {amplitude_ * pi * std::cos(pi * x.x) * std::sin(pi * x.y),
          amplitude_ * pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
}

double Source::operator()(Point x) const {
  if (!manufactured_) return value_;
  const double y = exact(x);
  return 2.0 * pi * pi * y + nl_.value(x, y) + control_ * y;
}

// ---------------------------------------------------------------------------
// Assembly helpers

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_triangles());
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const Triangle& t = mesh.triangle(c);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const auto& gi = mesh.grad_lambda(c, i);
        const auto& gj = mesh.grad_lambda(c, j);
        triplets.push_back({t[i], t[j], mesh.area(c) * (gi[0] * gj[0] + gi[1] * gj[1])});
      }
    }
  }
  return assemble_from_triplets(static_cast<int>(mesh.num_vertices()), std::move(triplets), true);
}

namespace {

template <class WeightAt>
SparseMatrix mass_with(const Mesh& mesh, WeightAt&& weight) {
  const QuadratureRule& rule = mass_rule();
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_triangles());
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const Triangle& t = mesh.triangle(c);
    std::array<double, 9> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& lam = rule.points[q];
      const double wq = 2.0 * mesh.area(c) * rule.weights[q] * weight(c, lam);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local[3 * i + j] += wq * lam[i] * lam[j];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) triplets.push_back({t[i], t[j], local[3 * i + j]});
  }
  return assemble_from_triplets(static_cast<int>(mesh.num_vertices()), std::move(triplets), true);
}

}  // namespace

SparseMatrix assemble_weighted_mass(const Mesh& mesh, const CellVector& w) {
  if (w.size() != mesh.num_triangles()) {
    throw InvalidArgument("assemble_weighted_mass: weight size does not match triangle count");
  }
  return mass_with(mesh, [&](std::size_t c, const std::array<double, 3>&) { return w[c]; });
}

SparseMatrix assemble_weighted_mass_nodal(const Mesh& mesh, const NodalVector& w) {
  if (w.size() != mesh.num_vertices()) {
    throw InvalidArgument("assemble_weighted_mass_nodal: weight size does not match vertex count");
  }
  return mass_with(mesh, [&](std::size_t c, const std::array<double, 3>& lam) {
    const Triangle& t = mesh.triangle(c);
    return lam[0] * w[t[0]] + lam[1] * w[t[1]] + lam[2] * w[t[2]];
  });
}

NodalVector dirac_combination(const Mesh& mesh, const std::vector<Point>& points,
                              const std::vector<double>& coefficients) {
  NodalVector load(mesh.num_vertices(), 0.0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (coefficients[k] == 0.0) continue;
    for (const auto& [i, phi] : dirac_load_vector(mesh, points[k])) {
      load[i] += coefficients[k] * phi;
    }
  }
  for (std::size_t i = 0; i < load.size(); ++i) {
    if (mesh.is_boundary(i)) load[i] = 0.0;
  }
  return load;
}

double l2_norm(const Mesh& mesh, const NodalVector& v) {
  const QuadratureRule& rule = quadrature_rule(3);
  double sum = 0.0;
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const Triangle& t = mesh.triangle(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& lam = rule.points[q];
      const double val = lam[0] * v[t[0]] + lam[1] * v[t[1]] + lam[2] * v[t[2]];
      sum += 2.0 * mesh.area(c) * rule.weights[q] * val * val;
    }
  }
  return std::sqrt(sum);
}

double l2_norm_cells(const Mesh& mesh, const CellVector& h) {
  double sum = 0.0;
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) sum += mesh.area(c) * h[c] * h[c];
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// PdeSystem

PdeSystem::PdeSystem(std::shared_ptr<const Mesh> mesh, Nonlinearity nl, Source f,
                     NewtonSettings newton, LinearSolverSettings linear)
    : mesh_(std::move(mesh)),
      nl_(nl),
      f_(std::move(f)),
      newton_(newton),
      linear_(linear),
      stiffness_(assemble_stiffness(*mesh_)) {
  const Mesh& m = *mesh_;
  const QuadratureRule& rule = mass_rule();
  slots_.resize(m.num_triangles());
  qpoints_.resize(m.num_triangles());
  fq_.resize(m.num_triangles());
  for (std::size_t c = 0; c < m.num_triangles(); ++c) {
    const Triangle& t = m.triangle(c);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) slots_[c][3 * i + j] = static_cast<int>(stiffness_.find(t[i], t[j]));
    for (int q = 0; q < 3; ++q) {
      qpoints_[c][q] = m.map_to_physical(c, rule.points[q]);
      fq_[c][q] = f_(qpoints_[c][q]);
      if (!std::isfinite(fq_[c][q])) throw InvalidArgument("PdeSystem: source is not finite");
    }
  }
}

void PdeSystem::zero_boundary(NodalVector& v) const {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mesh_->is_boundary(i)) v[i] = 0.0;
  }
}

std::vector<std::array<double, 3>> PdeSystem::at_quadrature(const NodalVector& v) const {
  const QuadratureRule& rule = mass_rule();
  std::vector<std::array<double, 3>> out(mesh_->num_triangles());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const Triangle& t = mesh_->triangle(c);
    for (int q = 0; q < 3; ++q) {
      const auto& lam = rule.points[q];
      out[c][q] = lam[0] * v[t[0]] + lam[1] * v[t[1]] + lam[2] * v[t[2]];
    }
  }
  return out;
}

NodalVector PdeSystem::load(const std::vector<std::array<double, 3>>& values) const {
  const QuadratureRule& rule = mass_rule();
  NodalVector out(mesh_->num_vertices(), 0.0);
  for (std::size_t c = 0; c < mesh_->num_triangles(); ++c) {
    const Triangle& t = mesh_->triangle(c);
    for (int q = 0; q < 3; ++q) {
      const double wq = 2.0 * mesh_->area(c) * rule.weights[q] * values[c][q];
      for (int i = 0; i < 3; ++i) out[t[i]] += wq * rule.points[q][i];
    }
  }
  zero_boundary(out);
  return out;
}

SparseMatrix PdeSystem::weighted_mass(const std::vector<std::array<double, 3>>& weights) const {
  const QuadratureRule& rule = mass_rule();
  std::vector<double> values(stiffness_.nnz(), 0.0);
  for (std::size_t c = 0; c < mesh_->num_triangles(); ++c) {
    for (int q = 0; q < 3; ++q) {
      const auto& lam = rule.points[q];
      const double wq = 2.0 * mesh_->area(c) * rule.weights[q] * weights[c][q];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) values[slots_[c][3 * i + j]] += wq * lam[i] * lam[j];
    }
  }
  return SparseMatrix(stiffness_.dim(), stiffness_.row_offsets(), stiffness_.columns(),
                      std::move(values), true);
}

NodalVector PdeSystem::residual(const NodalVector& y, const CellVector& u) const {
  const Mesh& m = *mesh_;
  if (y.size() != m.num_vertices() || u.size() != m.num_triangles()) {
    throw InvalidArgument("residual: field sizes do not match the mesh");
  }
  NodalVector r = stiffness_ * y;
  const auto yq = at_quadrature(y);
  std::vector<std::array<double, 3>> integrand(m.num_triangles());
  for (std::size_t c = 0; c < m.num_triangles(); ++c) {
    for (int q = 0; q < 3; ++q) {
      const double a = nl_.value(qpoints_[c][q], yq[c][q]);
      if (!std::isfinite(a)) {
        std::ostringstream msg;
        msg << "residual: nonlinearity '" << nl_.label() << "' returned a non-finite value at y = "
            << yq[c][q];
        throw NonlinearityError(msg.str());
      }
      integrand[c][q] = a + u[c] * yq[c][q] - fq_[c][q];
    }
  }
  const NodalVector rest = load(integrand);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += rest[i];
  zero_boundary(r);
  return r;
}

SparseMatrix PdeSystem::jacobian(const CellVector& u, const NodalVector& y) const {
  const Mesh& m = *mesh_;
  const auto yq = at_quadrature(y);
  std::vector<std::array<double, 3>> w(m.num_triangles());
  for (std::size_t c = 0; c < m.num_triangles(); ++c) {
    for (int q = 0; q < 3; ++q) {
      const double d = nl_.dy(qpoints_[c][q], yq[c][q]);
      if (!std::isfinite(d)) throw NonlinearityError("jacobian: non-finite da/dy");
      w[c][q] = d + u[c];
    }
  }
  SparseMatrix mass = weighted_mass(w);
  std::vector<double> values = mass.values();
  for (std::size_t k = 0; k < values.size(); ++k) values[k] += stiffness_.values()[k];
  const auto& rows = stiffness_.row_offsets();
  const auto& cols = stiffness_.columns();
  for (int i = 0; i < stiffness_.dim(); ++i) {
    const bool row_fixed = m.is_boundary(i);
    for (int k = rows[i]; k < rows[i + 1]; ++k) {
      if (row_fixed || m.is_boundary(cols[k])) values[k] = (cols[k] == i) ? 1.0 : 0.0;
    }
  }
  return SparseMatrix(stiffness_.dim(), rows, cols, std::move(values), true);
}

NodalVector PdeSystem::solve_free(const SparseMatrix& a, NodalVector rhs) const {
  zero_boundary(rhs);
  try {
    return solve_spd(a, rhs, linear_.tol, linear_.max_iter);
  } catch (const NoConvergence&) {
    return solve_direct(a, rhs);
  }
}

StateSolution PdeSystem::solve_state(const CellVector& u) const {
  const Mesh& m = *mesh_;
  if (u.size() != m.num_triangles()) throw InvalidArgument("solve_state: control size mismatch");
  StateSolution sol;
  sol.y.assign(m.num_vertices(), 0.0);
  NodalVector r = residual(sol.y, u);
  sol.residual_history.push_back(norm_inf(r));
  for (int it = 0;; ++it) {
    if (sol.residual_history.back() <= newton_.tol) {
      sol.iterations = it;
      return sol;
    }
    if (it == newton_.max_iter) break;
    NodalVector minus_r(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) minus_r[i] = -r[i];
    const NodalVector step = solve_free(jacobian(u, sol.y), std::move(minus_r));
    const double r_norm = norm2(r);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k <= newton_.max_halvings; ++k, t *= 0.5) {
      NodalVector trial = sol.y;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += t * step[i];
      NodalVector r_trial = residual(trial, u);
      if (norm2(r_trial) < r_norm) {
        sol.y = std::move(trial);
        r = std::move(r_trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "solve_state: damping exhausted at Newton iteration " << it + 1
          << ", residual " << sol.residual_history.back();
      throw NoConvergence(msg.str(), sol.residual_history);
    }
    sol.residual_history.push_back(norm_inf(r));
  }
  std::ostringstream msg;
  msg << "solve_state: Newton did not converge in " << newton_.max_iter << " iterations, residual "
      << sol.residual_history.back();
  throw NoConvergence(msg.str(), sol.residual_history);
}

LinearizedOperator PdeSystem::linearize(const CellVector& u, const NodalVector& y) const {
  ++linearizations_;
  return LinearizedOperator(*this, u, y, jacobian(u, y));
}

// ---------------------------------------------------------------------------
// LinearizedOperator

LinearizedOperator::LinearizedOperator(const PdeSystem& system, CellVector u, NodalVector y,
                                       SparseMatrix matrix)
    : system_(&system), u_(std::move(u)), y_(std::move(y)), matrix_(std::move(matrix)) {}

NodalVector LinearizedOperator::solve(NodalVector load) const {
  ++solve_count_;
  return system_->solve_free(matrix_, std::move(load));
}

NodalVector LinearizedOperator::solve_adjoint(const TrackingData& tracking) const {
  const Mesh& m = system_->mesh();
  std::vector<double> mismatch(tracking.size());
  for (std::size_t k = 0; k < tracking.size(); ++k) {
    mismatch[k] = evaluate_at(m, y_, tracking.points[k]) - tracking.targets[k];
  }
  return solve(dirac_combination(m, tracking.points, mismatch));
}

NodalVector LinearizedOperator::solve_linearized_state(const CellVector& h) const {
  const auto yq = system_->at_quadrature(y_);
  std::vector<std::array<double, 3>> g(yq.size());
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int q = 0; q < 3; ++q) g[c][q] = -h[c] * yq[c][q];
  return solve(system_->load(g));
}

NodalVector LinearizedOperator::solve_second_sensitivity(const CellVector& h1, const CellVector& h2,
                                                         const NodalVector& z1,
                                                         const NodalVector& z2) const {
  const auto yq = system_->at_quadrature(y_);
  const auto z1q = system_->at_quadrature(z1);
  const auto z2q = system_->at_quadrature(z2);
  const auto& xq = system_->quadrature_points();
  const Nonlinearity& nl = system_->nonlinearity();
  std::vector<std::array<double, 3>> g(yq.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    for (int q = 0; q < 3; ++q) {
      g[c][q] = -(h1[c] * z2q[c][q] + h2[c] * z1q[c][q]) -
                nl.dyy(xq[c][q], yq[c][q]) * z1q[c][q] * z2q[c][q];
    }
  }
  return solve(system_->load(g));
}

NodalVector LinearizedOperator::solve_adjoint_sensitivity(const NodalVector& p, const CellVector& h,
                                                          const NodalVector& z,
                                                          const TrackingData& tracking) const {
  const Mesh& m = system_->mesh();
  const auto yq = system_->at_quadrature(y_);
  const auto zq = system_->at_quadrature(z);
  const auto pq = system_->at_quadrature(p);
  const auto& xq = system_->quadrature_points();
  const Nonlinearity& nl = system_->nonlinearity();
  std::vector<std::array<double, 3>> g(yq.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    for (int q = 0; q < 3; ++q) {
      g[c][q] = -(nl.dyy(xq[c][q], yq[c][q]) * zq[c][q] + h[c]) * pq[c][q];
    }
  }
  NodalVector rhs = system_->load(g);
  std::vector<double> zt(tracking.size());
  for (std::size_t k = 0; k < tracking.size(); ++k) zt[k] = evaluate_at(m, z, tracking.points[k]);
  const NodalVector point_part = dirac_combination(m, tracking.points, zt);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += point_part[i];
  return solve(std::move(rhs));
}

}  // namespace bcopt
