#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace bcopt {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Square matrix in compressed sparse row storage. Column indices are
/// strictly increasing within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int dim, std::vector<int> row_offsets, std::vector<int> columns,
               std::vector<double> values, bool symmetric);

  int dim() const { return dim_; }
  std::size_t nnz() const { return values_.size(); }
  bool symmetric() const { return symmetric_; }

  const std::vector<int>& row_offsets() const { return row_offsets_; }
  const std::vector<int>& columns() const { return columns_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(int i, int j) const;
  /// Position of (i, j) in values(), or -1.
  std::ptrdiff_t find(int i, int j) const;

  void multiply(std::span<const double> x, std::span<double> out) const;
  std::vector<double> operator*(std::span<const double> x) const;

  std::vector<double> diagonal() const;
  double max_abs() const;
  /// max |A - A^T| over stored entries.
  double asymmetry() const;

 private:
  int dim_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> columns_;
  std::vector<double> values_;
  bool symmetric_ = false;
};

/// Builds a CSR matrix, summing duplicates. Triplets are sorted before
/// summation, so the result is independent of the input order. When
/// `symmetric` is set, the result is checked against the symmetry tolerance.
SparseMatrix assemble_from_triplets(int dim, std::vector<Triplet> triplets, bool symmetric = false);

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. Returns x with
/// ||Ax - b|| <= tol ||b||; throws NoConvergence otherwise.
std::vector<double> solve_spd(const SparseMatrix& a, std::span<const double> rhs, double tol,
                              int max_iter, SolveStats* stats = nullptr);

/// Banded LU with partial pivoting in the natural ordering.
std::vector<double> solve_direct(const SparseMatrix& a, std::span<const double> rhs);

double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

/// MatrixMarket coordinate dump (general, real).
void write_matrix_market(std::ostream& out, const SparseMatrix& a);

}  // namespace bcopt
