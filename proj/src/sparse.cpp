#include "bcopt/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "bcopt/error.hpp"

namespace bcopt {

SparseMatrix::SparseMatrix(int dim, std::vector<int> row_offsets, std::vector<int> columns,
                           std::vector<double> values, bool symmetric)
    : dim_(dim),
      row_offsets_(std::move(row_offsets)),
      columns_(std::move(columns)),
      values_(std::move(values)),
      symmetric_(symmetric) {
  if (dim_ < 0 || row_offsets_.size() != static_cast<std::size_t>(dim_) + 1 ||
      columns_.size() != values_.size() ||
      static_cast<std::size_t>(row_offsets_.back()) != values_.size()) {
    throw InvalidArgument("SparseMatrix: inconsistent CSR arrays");
  }
}

double SparseMatrix::at(int i, int j) const {
  const std::ptrdiff_t k = find(i, j);
  return k < 0 ? 0.0 : values_[k];
}

std::ptrdiff_t SparseMatrix::find(int i, int j) const {
  const auto begin = columns_.begin() + row_offsets_[i];
  const auto end = columns_.begin() + row_offsets_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return it - columns_.begin();
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> out) const {
  for (int i = 0; i < dim_; ++i) {
    double sum = 0.0;
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) sum += values_[k] * x[columns_[k]];
    out[i] = sum;
  }
}

std::vector<double> SparseMatrix::operator*(std::span<const double> x) const {
  std::vector<double> out(dim_);
  multiply(x, out);
  return out;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(dim_, 0.0);
  for (int i = 0; i < dim_; ++i) d[i] = at(i, i);
  return d;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseMatrix::asymmetry() const {
  double m = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      m = std::max(m, std::abs(values_[k] - at(columns_[k], i)));
    }
  }
  return m;
}

SparseMatrix assemble_from_triplets(int dim, std::vector<Triplet> triplets, bool symmetric) {
  if (dim < 0) throw InvalidArgument("assemble_from_triplets: negative dimension");
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= dim || t.col < 0 || t.col >= dim) {
      std::ostringstream msg;
      msg << "assemble_from_triplets: index (" << t.row << ", " << t.col
          << ") out of range for dimension " << dim;
      throw InvalidArgument(msg.str());
    }
  }
  // Sort by (row, col, value) so equal-index runs are summed in a fixed order.
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.value < b.value;
  });
  std::vector<int> offsets(dim + 1, 0);
  std::vector<int> columns;
  std::vector<double> values;
  for (std::size_t k = 0; k < triplets.size();) {
    const int r = triplets[k].row, c = triplets[k].col;
    double sum = 0.0;
    for (; k < triplets.size() && triplets[k].row == r && triplets[k].col == c; ++k) {
      sum += triplets[k].value;
    }
    columns.push_back(c);
    values.push_back(sum);
    ++offsets[r + 1];
  }
  for (int i = 0; i < dim; ++i) offsets[i + 1] += offsets[i];
  SparseMatrix a(dim, std::move(offsets), std::move(columns), std::move(values), symmetric);
  if (symmetric && a.asymmetry() > 1e-12 * a.max_abs()) {
    throw InvalidArgument("assemble_from_triplets: matrix tagged symmetric is not symmetric");
  }
  return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> solve_spd(const SparseMatrix& a, std::span<const double> rhs, double tol,
                              int max_iter, SolveStats* stats) {
  const int n = a.dim();
  if (static_cast<int>(rhs.size()) != n) throw InvalidArgument("solve_spd: rhs size mismatch");
  if (!a.symmetric()) throw InvalidArgument("solve_spd: matrix is not tagged symmetric");

  std::vector<double> x(n, 0.0);
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return x;
  }
  std::vector<double> inv_diag = a.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) throw InvalidArgument("solve_spd: non-positive diagonal entry");
    d = 1.0 / d;
  }

  std::vector<double> r(rhs.begin(), rhs.end()), z(n), p(n), ap(n);
  for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  std::vector<double> history;
  double rel = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      throw InvalidArgument("solve_spd: matrix is not positive definite");
    }
    const double step = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * ap[i];
    }
    rel = norm2(r) / bnorm;
    history.push_back(rel);
    if (rel <= tol) {
      // confirm against the true residual; the recursive one drifts
      a.multiply(x, ap);
      for (int i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
      rel = norm2(r) / bnorm;
      if (rel <= tol) {
        if (stats) *stats = {it, rel};
        return x;
      }
    }
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  std::ostringstream msg;
  msg << "solve_spd: no convergence after " << max_iter << " iterations, relative residual "
      << rel;
  throw NoConvergence(msg.str(), std::move(history));
}

std::vector<double> solve_direct(const SparseMatrix& a, std::span<const double> rhs) {
  const int n = a.dim();
  if (static_cast<int>(rhs.size()) != n) throw InvalidArgument("solve_direct: rhs size mismatch");
  if (n == 0) return {};
  int kl = 0, ku = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      kl = std::max(kl, i - a.columns()[k]);
      ku = std::max(ku, a.columns()[k] - i);
    }
  }
  // Row-major band: row i holds columns [i - kl, i + kl + ku]; pivoting can
  // widen the upper band by kl.
  const int width = 2 * kl + ku + 1;
  std::vector<double> band(static_cast<std::size_t>(n) * width, 0.0);
  const auto idx = [&](int i, int j) -> double& {
    return band[static_cast<std::size_t>(i) * width + (j - i + kl)];
  };
  for (int i = 0; i < n; ++i) {
    for (int k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) idx(i, a.columns()[k]) = a.values()[k];
  }
  std::vector<double> b(rhs.begin(), rhs.end());
  const double scale = std::max(a.max_abs(), 1e-300);
  for (int col = 0; col < n; ++col) {
    const int last = std::min(n - 1, col + kl);
    int piv = col;
    for (int i = col + 1; i <= last; ++i) {
      if (std::abs(idx(i, col)) > std::abs(idx(piv, col))) piv = i;
    }
    if (std::abs(idx(piv, col)) <= 1e-14 * scale) {
      std::ostringstream msg;
      msg << "solve_direct: matrix is singular to working precision at column " << col;
      throw SingularMatrix(msg.str());
    }
    const int right = std::min(n - 1, col + kl + ku);
    if (piv != col) {
      for (int j = col; j <= right; ++j) std::swap(idx(piv, j), idx(col, j));
      std::swap(b[piv], b[col]);
    }
    const double d = idx(col, col);
    for (int i = col + 1; i <= last; ++i) {
      const double m = idx(i, col) / d;
      if (m == 0.0) continue;
      idx(i, col) = 0.0;
      for (int j = col + 1; j <= right; ++j) idx(i, j) -= m * idx(col, j);
      b[i] -= m * b[col];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    const int right = std::min(n - 1, i + kl + ku);
    for (int j = i + 1; j <= right; ++j) s -= idx(i, j) * x[j];
    x[i] = s / idx(i, i);
  }
  return x;
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.dim() << ' ' << a.dim() << ' ' << a.nnz() << '\n';
  const auto old = out.precision(17);
  for (int i = 0; i < a.dim(); ++i) {
    for (int k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      out << i + 1 << ' ' << a.columns()[k] + 1 << ' ' << a.values()[k] << '\n';
    }
  }
  out.precision(old);
}

}  // namespace bcopt
