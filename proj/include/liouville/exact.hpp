#pragma once

// Exact rational and integer linear algebra shared by the symbolic solvers
// and the normal-form engine.

#include <gmpxx.h>

#include <cstddef>
#include <vector>

namespace liouville::exact {

using Q = mpq_class;
using Z = mpz_class;

class QMatrix {
 public:
  QMatrix() = default;
  QMatrix(std::size_t rows, std::size_t cols) : r_(rows), c_(cols), d_(rows * cols) {}
  static QMatrix identity(std::size_t n);

  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }
  Q& operator()(std::size_t i, std::size_t j) { return d_[i * c_ + j]; }
  const Q& operator()(std::size_t i, std::size_t j) const { return d_[i * c_ + j]; }

  QMatrix transpose() const;
  bool is_zero() const;
  friend QMatrix operator*(const QMatrix& a, const QMatrix& b);
  friend QMatrix operator+(const QMatrix& a, const QMatrix& b);
  friend QMatrix operator-(const QMatrix& a, const QMatrix& b);
  friend bool operator==(const QMatrix& a, const QMatrix& b);

 private:
  std::size_t r_ = 0, c_ = 0;
  std::vector<Q> d_;
};

/// Reduced row echelon form in place; returns the pivot columns.
std::vector<std::size_t> rref(QMatrix& a);
std::size_t rank(QMatrix a);
/// Columns form a basis of {x : A x = 0}.
QMatrix nullspace(const QMatrix& a);
/// Throws Error(NotInvertible).
QMatrix inverse(const QMatrix& a);
/// Moore-Penrose pseudo-inverse via a full-rank factorization.
QMatrix pinv(const QMatrix& a);
/// Solves A x = b; returns false when inconsistent. Picks free variables 0.
bool solve(const QMatrix& a, const std::vector<Q>& b, std::vector<Q>& x);

using ZRow = std::vector<Z>;

/// Row Hermite normal form of the lattice spanned by `rows`: zero rows dropped,
/// pivots positive, entries above each pivot reduced into [0, pivot).
std::vector<ZRow> hermite(std::vector<ZRow> rows);
/// Integer basis (Hermite-reduced rows) of {k in Z^m : A k = 0}.
std::vector<ZRow> integer_kernel(const QMatrix& a);
/// Z^m intersected with the rational span of `rows`, Hermite-reduced.
std::vector<ZRow> saturate(const std::vector<ZRow>& rows, std::size_t m);
/// Rows scaled by the lcm of denominators, then divided by their content.
ZRow primitive(const std::vector<Q>& row);

}  // namespace liouville::exact
