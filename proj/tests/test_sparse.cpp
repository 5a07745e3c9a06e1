#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bcopt/error.hpp"
#include "bcopt/geometry.hpp"
#include "bcopt/pde.hpp"
#include "bcopt/sparse.hpp"
#include "doctest.h"

using namespace bcopt;

namespace {

using Dense = std::vector<std::vector<double>>;

std::vector<Triplet> dense_triplets(const Dense& d) {
  std::vector<Triplet> t;
  for (int i = 0; i < static_cast<int>(d.size()); ++i)
    for (int j = 0; j < static_cast<int>(d.size()); ++j)
      if (d[i][j] != 0.0) t.push_back({i, j, d[i][j]});
  return t;
}

// Dense Cholesky solve, the oracle for solve_spd.
std::vector<double> cholesky_solve(Dense a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) a[j][j] -= a[j][k] * a[j][k];
    a[j][j] = std::sqrt(a[j][j]);
    for (std::size_t i = j + 1; i < n; ++i) {
      for (std::size_t k = 0; k < j; ++k) a[i][j] -= a[i][k] * a[j][k];
      a[i][j] /= a[j][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i][k] * b[k];
    b[i] /= a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k][i] * b[k];
    b[i] /= a[i][i];
  }
  return b;
}

// Dense Gaussian elimination with partial pivoting, the oracle for solve_direct.
std::vector<double> lu_solve(Dense a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t i = c + 1; i < n; ++i)
      if (std::abs(a[i][c]) > std::abs(a[p][c])) p = i;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t i = c + 1; i < n; ++i) {
      const double m = a[i][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[i][j] -= m * a[c][j];
      b[i] -= m * b[c];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[i][k] * b[k];
    b[i] /= a[i][i];
  }
  return b;
}

Dense random_spd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dense b(n, std::vector<double>(n));
  for (auto& row : b)
    for (double& x : row) x = u(rng);
  Dense a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) a[i][j] += b[i][k] * b[j][k];
      if (i == j) a[i][j] += 1.0;
    }
  return a;
}

}  // namespace

TEST_CASE("assemble_from_triplets sums duplicates") {
  const SparseMatrix a = assemble_from_triplets(1, {{0, 0, 1.0}, {0, 0, 2.0}});
  CHECK(a.dim() == 1);
  CHECK(a.nnz() == 1);
  CHECK(a.at(0, 0) == 3.0);

  const SparseMatrix z = assemble_from_triplets(3, {});
  CHECK(z.nnz() == 0);
  CHECK(z.at(1, 1) == 0.0);

  CHECK_THROWS_AS(assemble_from_triplets(2, {{2, 0, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(assemble_from_triplets(2, {{0, -1, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(assemble_from_triplets(2, {{0, 1, 1.0}}, true), InvalidArgument);
}

TEST_CASE("assembly matches dense accumulation and is order independent") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> idx(0, 9);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<Triplet> triplets;
  Dense dense(10, std::vector<double>(10, 0.0));
  for (int k = 0; k < 300; ++k) {
    const Triplet t{idx(rng), idx(rng), val(rng)};
    triplets.push_back(t);
  }
  for (const Triplet& t : triplets) dense[t.row][t.col] += t.value;
  const SparseMatrix a = assemble_from_triplets(10, triplets);
  for (int i = 0; i < 10; ++i) {
    for (int k = a.row_offsets()[i]; k + 1 < a.row_offsets()[i + 1]; ++k) {
      CHECK(a.columns()[k] < a.columns()[k + 1]);
    }
    for (int j = 0; j < 10; ++j) CHECK(a.at(i, j) == doctest::Approx(dense[i][j]).epsilon(1e-13));
  }
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(triplets.begin(), triplets.end(), rng);
    const SparseMatrix b = assemble_from_triplets(10, triplets);
    CHECK(b.values() == a.values());
    CHECK(b.columns() == a.columns());
  }
}

TEST_CASE("solve_spd small cases") {
  const SparseMatrix id = assemble_from_triplets(3, {{0, 0, 1}, {1, 1, 1}, {2, 2, 1}}, true);
  const std::vector<double> rhs{1.5, -2.0, 3.25};
  CHECK(solve_spd(id, rhs, 1e-14, 10) == rhs);

  const SparseMatrix d = assemble_from_triplets(2, {{0, 0, 2}, {1, 1, 4}}, true);
  const auto x = solve_spd(d, std::vector<double>{2, 8}, 1e-14, 10);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));

  const SparseMatrix nonsym = assemble_from_triplets(2, {{0, 0, 2}, {0, 1, 1}, {1, 1, 4}});
  CHECK_THROWS_AS(solve_spd(nonsym, std::vector<double>{1, 1}, 1e-10, 10), InvalidArgument);
}

TEST_CASE("solve_spd matches dense Cholesky on random SPD matrices") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Dense a = random_spd(20, rng);
    std::vector<double> b(20);
    for (double& x : b) x = u(rng);
    const SparseMatrix s = assemble_from_triplets(20, dense_triplets(a), true);
    SolveStats stats;
    const auto x = solve_spd(s, b, 1e-13, 1000, &stats);
    const auto ref = cholesky_solve(a, b);
    for (int i = 0; i < 20; ++i) CHECK(std::abs(x[i] - ref[i]) <= 1e-8);
    // residual contract
    const auto ax = s * x;
    double r = 0.0;
    for (int i = 0; i < 20; ++i) r += (ax[i] - b[i]) * (ax[i] - b[i]);
    CHECK(std::sqrt(r) <= 1e-13 * norm2(b));
    CHECK(stats.relative_residual <= 1e-13);
  }
}

TEST_CASE("solve_spd reports non-convergence with the residual history") {
  std::mt19937_64 rng(5);
  const Dense a = random_spd(30, rng);
  const SparseMatrix s = assemble_from_triplets(30, dense_triplets(a), true);
  std::vector<double> b(30, 1.0);
  try {
    solve_spd(s, b, 1e-15, 2);
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.residual_history().size() == 2);
    CHECK(e.final_residual() > 1e-15);
  }
}

TEST_CASE("solve_direct") {
  const SparseMatrix one = assemble_from_triplets(1, {{0, 0, 2.0}});
  CHECK(solve_direct(one, std::vector<double>{4.0})[0] == 2.0);

  // permutation matrix: row i has a one in column perm[i]
  const std::vector<int> perm{2, 0, 3, 1};
  std::vector<Triplet> t;
  for (int i = 0; i < 4; ++i) t.push_back({i, perm[i], 1.0});
  const SparseMatrix p = assemble_from_triplets(4, t);
  const std::vector<double> b{10, 20, 30, 40};
  const auto x = solve_direct(p, b);
  for (int i = 0; i < 4; ++i) CHECK(x[perm[i]] == b[i]);

  const SparseMatrix singular = assemble_from_triplets(2, {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  CHECK_THROWS_AS(solve_direct(singular, std::vector<double>{1, 2}), SingularMatrix);
}

TEST_CASE("solve_direct matches dense LU on random nonsingular matrices") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Dense a(15, std::vector<double>(15));
    for (auto& row : a)
      for (double& x : row) x = u(rng);
    for (int i = 0; i < 15; ++i) a[i][i] += 3.0;
    std::vector<double> b(15);
    for (double& x : b) x = u(rng);
    const auto x = solve_direct(assemble_from_triplets(15, dense_triplets(a)), b);
    const auto ref = lu_solve(a, b);
    for (int i = 0; i < 15; ++i) CHECK(std::abs(x[i] - ref[i]) <= 1e-9);
  }
}

TEST_CASE("solve_direct agrees with CG on a stiffness system") {
  const Mesh m = build_structured_mesh(12);
  const SparseMatrix k = PdeSystem(std::make_shared<Mesh>(m), Nonlinearity(), Source::constant(1.0))
                             .jacobian(CellVector(m.num_triangles(), 0.0),
                                       NodalVector(m.num_vertices(), 0.0));
  std::vector<double> b(m.num_vertices(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = m.is_boundary(i) ? 0.0 : std::sin(1.0 * i);
  const auto x1 = solve_direct(k, b);
  const auto x2 = solve_spd(k, b, 1e-14, 5000);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(x1[i] - x2[i]) <= 1e-10);
  const auto r = k * x1;
  double err = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) err += (r[i] - b[i]) * (r[i] - b[i]);
  CHECK(std::sqrt(err) <= 1e-10 * norm2(b));
}

TEST_CASE("eliminated stiffness is coercive (inverse power iteration)") {
  const Mesh m = build_structured_mesh(8);
  const SparseMatrix k = PdeSystem(std::make_shared<Mesh>(m), Nonlinearity(), Source::constant(0.0))
                             .jacobian(CellVector(m.num_triangles(), 0.0),
                                       NodalVector(m.num_vertices(), 0.0));
  std::vector<double> x(m.num_vertices(), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double n = norm2(x);
    for (double& v : x) v /= n;
    const auto y = solve_spd(k, x, 1e-14, 5000);
    lambda = 1.0 / dot(x, y);
    x = y;
  }
  CHECK(lambda > 0.0);
}

TEST_CASE("matrix market dump") {
  const SparseMatrix a = assemble_from_triplets(2, {{0, 0, 1.5}, {1, 0, -2.0}});
  std::ostringstream out;
  write_matrix_market(out, a);
  CHECK(out.str() == "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.5\n2 1 -2\n");
}
