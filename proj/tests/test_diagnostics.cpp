#include <cmath>
#include <numbers>
#include <random>

#include "bcopt/diagnostics.hpp"
#include "bcopt/error.hpp"
#include "doctest.h"

using namespace bcopt;

namespace {

ControlProblem make_problem(int n, Nonlinearity nl, Source f, TrackingData tracking, double alpha,
                            Bounds bounds) {
  auto mesh = std::make_shared<Mesh>(build_structured_mesh(n));
  ControlProblem p;
  p.pde = std::make_shared<PdeSystem>(mesh, nl, std::move(f));
  p.tracking = std::move(tracking);
  p.alpha = alpha;
  p.bounds = bounds;
  p.space = std::make_shared<ControlSpace>(*mesh);
  return p;
}

}  // namespace

TEST_CASE("manufactured convergence study") {
  SUBCASE("cubic case rates") {
    const ConvergenceTable t = manufactured_convergence_study({8, 16, 32, 64}, ManufacturedCase::cubic);
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows[0].rate_l2 == 0.0);
    CHECK(t.rows.back().rate_l2 >= 1.8);
    CHECK(t.rows.back().rate_l2 <= 2.2);
    CHECK(t.rows.back().rate_h1 >= 0.8);
    CHECK(t.rows.back().rate_h1 <= 1.2);
    for (std::size_t k = 1; k < t.rows.size(); ++k) {
      CHECK(t.rows[k].rate_l2 == doctest::Approx(std::log2(t.rows[k - 1].error_l2 / t.rows[k].error_l2)));
      CHECK(t.rows[k].h_max == t.rows[k - 1].h_max / 2);
    }
  }
  SUBCASE("zero solution") {
    const ConvergenceTable t = manufactured_convergence_study({4, 8, 16}, ManufacturedCase::zero);
    for (const auto& r : t.rows) {
      CHECK(r.error_l2 <= 1e-12);
      CHECK(r.error_h1 <= 1e-12);
    }
  }
  SUBCASE("linear case rates are scale invariant") {
    const ConvergenceTable a = manufactured_convergence_study({8, 16, 32}, ManufacturedCase::linear, 1.0);
    const ConvergenceTable b = manufactured_convergence_study({8, 16, 32}, ManufacturedCase::linear, 250.0);
    for (std::size_t k = 1; k < a.rows.size(); ++k) {
      CHECK(std::abs(a.rows[k].rate_l2 - b.rows[k].rate_l2) <= 1e-8);
      CHECK(std::abs(a.rows[k].rate_h1 - b.rows[k].rate_h1) <= 1e-8);
    }
  }
  SUBCASE("level validation") {
    CHECK_THROWS_AS(manufactured_convergence_study({8, 16}, ManufacturedCase::cubic), InvalidArgument);
    CHECK_THROWS_AS(manufactured_convergence_study({8, 16, 24}, ManufacturedCase::cubic), InvalidArgument);
    CHECK_THROWS_AS(manufactured_case_from_label("quintic"), InvalidArgument);
  }
}

TEST_CASE("finite-difference checks") {
  const ControlProblem cubic = make_problem(8, Nonlinearity(NonlinearityKind::cubic), Source::constant(20.0),
                                            {{{0.3, 0.35}, {0.7, 0.6}}, {0.4, 0.1}}, 1e-2, {0.0, 3.0});
  const ReducedFunctional j(cubic);
  const std::size_t nc = j.mesh().num_triangles();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uu(0.5, 2.5), uh(-1.0, 1.0);
  CellVector u(nc), h(nc);
  for (double& x : u) x = uu(rng);
  for (double& x : h) x = uh(rng);

  SUBCASE("gradient") {
    const FdCheck c = fd_gradient_check(j, u, h, {1e-1, 1e-2, 1e-3, 1e-4});
    CHECK(c.ok);
    CHECK(c.best_error <= 1e-5);
    CHECK(c.best_order >= 1.8);
    const FdCheck zero = fd_gradient_check(j, u, CellVector(nc, 0.0), {1e-3});
    CHECK(zero.analytic == 0.0);
    CHECK(zero.rows[0].fd == 0.0);
  }
  SUBCASE("hessian") {
    const FdCheck c = fd_hessian_check(j, u, h, {1e-2, 1e-3});
    CHECK(c.best_error <= 1e-3);
    const FdCheck zero = fd_hessian_check(j, u, CellVector(nc, 0.0), {1e-3});
    CHECK(zero.analytic == 0.0);
    CHECK(zero.rows[0].fd == 0.0);
  }
  SUBCASE("inadmissible perturbation names the bound") {
    CellVector big = h;
    big[3] = 1000.0;
    try {
      fd_gradient_check(j, u, big, {1e-2});
      FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("upper bound") != std::string::npos);
    }
    big[3] = -1000.0;
    try {
      fd_hessian_check(j, u, big, {1e-2});
      FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("lower bound") != std::string::npos);
    }
  }
  SUBCASE("quadratic functional: FD exact to round-off") {
    const ControlProblem quad =
        make_problem(6, Nonlinearity(NonlinearityKind::zero), Source::constant(3.0), {}, 0.5, {-2.0, 2.0});
    const ReducedFunctional q(quad);
    const std::size_t m = q.mesh().num_triangles();
    CellVector v(m, 0.1), d(m);
    for (double& x : d) x = uh(rng);
    for (const FdRow& r : fd_gradient_check(q, v, d, {1e-1, 1e-2, 1e-3}).rows) CHECK(r.rel_error <= 1e-9);
    const FdCheck hc = fd_hessian_check(q, v, d, {1e-1, 1e-2});
    CHECK(std::abs(hc.analytic - 0.5 * std::pow(l2_norm_cells(q.mesh(), d), 2)) <= 1e-14);
    CHECK(hc.rows[0].rel_error <= 1e-9);
  }
}

TEST_CASE("adjoint singularity fit") {
  SUBCASE("p == 0 gives slope 0") {
    const Mesh m = build_structured_mesh(16);
    const SingularityFit f =
        adjoint_singularity_fit(m, NodalVector(m.num_vertices(), 0.0), {0.5, 0.5}, 0.0, {0.4, 0.3, 0.2});
    CHECK(f.slope == 0.0);
  }
  SUBCASE("linear benchmark against 1/(2 pi)") {
    const std::vector<double> radii{0.2, 0.1, 0.05};
    const SingularityFit f1 = singularity_benchmark(64, {0.5, 0.5}, 1.0, radii);
    const SingularityFit f2 = singularity_benchmark(64, {0.5, 0.5}, 2.0, radii);
    CHECK(f1.reference_slope == doctest::Approx(1.0 / (2 * std::numbers::pi)));
    CHECK(std::abs(f1.slope - f1.reference_slope) <= 0.15 * f1.reference_slope);
    CHECK(std::abs(f2.slope / f1.slope - 2.0) <= 0.04);
    CHECK(f1.mean_abs_p.size() == radii.size());
  }
  SUBCASE("radius validation") {
    const Mesh m = build_structured_mesh(8);
    const NodalVector p(m.num_vertices(), 0.0);
    CHECK_THROWS_AS(adjoint_singularity_fit(m, p, {0.5, 0.5}, 1.0, {0.2, 0.3}), InvalidArgument);
    CHECK_THROWS_AS(adjoint_singularity_fit(m, p, {0.5, 0.5}, 1.0, {0.3, 0.1}), InvalidArgument);
    CHECK_THROWS_AS(adjoint_singularity_fit(m, p, {0.2, 0.5}, 1.0, {0.3, 0.2}), InvalidArgument);
  }
}

TEST_CASE("nodal interpolant and H1 seminorm") {
  const Mesh m = build_structured_mesh(6);
  const NodalVector c = nodal_interpolant(m, CellVector(m.num_triangles(), 2.5));
  for (double v : c) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(h1_seminorm(m, c) <= 1e-13);
  // |x|_H1 on the unit square is 1
  const NodalVector x = interpolate(m, [](Point p) { return p.x; });
  CHECK(std::abs(h1_seminorm(m, x) - 1.0) <= 1e-13);
}

TEST_CASE("control regularity probe") {
  OptimizerConfig config;
  config.max_outer = 2000;
  SUBCASE("no tracking points: constant control, zero seminorm") {
    const auto make = [](int n) {
      return make_problem(n, Nonlinearity(NonlinearityKind::cubic), Source::constant(5.0), {}, 0.1, {-1.0, 1.0});
    };
    const RegularityReport r = control_regularity_probe(make, {4, 8, 16}, config);
    for (const auto& l : r.levels) {
      CHECK(l.converged);
      CHECK(l.h1_seminorm == 0.0);
      CHECK(l.lipschitz == 0.0);
    }
    CHECK(r.h1_bounded);
    CHECK(r.decay.empty());
  }
  SUBCASE("cubic problem with active tracking") {
    const auto make = [](int n) {
      return make_problem(n, Nonlinearity(NonlinearityKind::cubic), Source::constant(20.0),
                          {{{0.3, 0.35}, {0.7, 0.6}}, {0.4, 0.1}}, 1e-2, {0.0, 3.0});
    };
    const RegularityReport r = control_regularity_probe(make, {8, 16}, config);
    REQUIRE(r.levels.size() == 2);
    CHECK(r.levels[1].converged);
    CHECK(r.lipschitz_ratios.size() == 1);
    CHECK(r.decay.size() == 6);
    for (const auto& d : r.decay) CHECK(d.bound_ratio >= 0.0);
  }
}

TEST_CASE("stability probe") {
  const auto rows = stability_probe(Nonlinearity(NonlinearityKind::cubic), Source::constant(10.0), 0.5,
                                    {8, 16, 32});
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.data_norm == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(r.sup_norm > 0.0);
    CHECK(r.sup_norm < 10.0);
  }
  const auto zero = stability_probe(Nonlinearity(NonlinearityKind::cubic), Source::constant(0.0), 0.5, {4});
  CHECK(zero[0].sup_norm == 0.0);
}
