#include "liouville/exact.hpp"

#include <algorithm>

#include "liouville/error.hpp"

namespace liouville::exact {

QMatrix QMatrix::identity(std::size_t n) {
  QMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

QMatrix QMatrix::transpose() const {
  QMatrix t(c_, r_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool QMatrix::is_zero() const {
  return std::all_of(d_.begin(), d_.end(), [](const Q& q) { return sgn(q) == 0; });
}

QMatrix operator*(const QMatrix& a, const QMatrix& b) {
  if (a.c_ != b.r_) throw Error(ErrorKind::InvalidArgument, "matrix shape mismatch");
  QMatrix r(a.r_, b.c_);
  for (std::size_t i = 0; i < a.r_; ++i)
    for (std::size_t k = 0; k < a.c_; ++k) {
      if (sgn(a(i, k)) == 0) continue;
      for (std::size_t j = 0; j < b.c_; ++j) r(i, j) += a(i, k) * b(k, j);
    }
  return r;
}

QMatrix operator+(const QMatrix& a, const QMatrix& b) {
  QMatrix r = a;
  for (std::size_t i = 0; i < r.d_.size(); ++i) r.d_[i] += b.d_[i];
  return r;
}

QMatrix operator-(const QMatrix& a, const QMatrix& b) {
  QMatrix r = a;
  for (std::size_t i = 0; i < r.d_.size(); ++i) r.d_[i] -= b.d_[i];
  return r;
}

bool operator==(const QMatrix& a, const QMatrix& b) { return a.r_ == b.r_ && a.c_ == b.c_ && a.d_ == b.d_; }

std::vector<std::size_t> rref(QMatrix& a) {
  std::vector<std::size_t> piv;
  std::size_t row = 0;
  for (std::size_t col = 0; col < a.cols() && row < a.rows(); ++col) {
    std::size_t p = row;
    while (p < a.rows() && sgn(a(p, col)) == 0) ++p;
    if (p == a.rows()) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(p, j), a(row, j));
    Q inv = 1 / a(row, col);
    for (std::size_t j = 0; j < a.cols(); ++j) a(row, j) *= inv;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (i == row || sgn(a(i, col)) == 0) continue;
      Q f = a(i, col);
      for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= f * a(row, j);
    }
    piv.push_back(col);
    ++row;
  }
  return piv;
}

std::size_t rank(QMatrix a) { return rref(a).size(); }

QMatrix nullspace(const QMatrix& a) {
  QMatrix r = a;
  auto piv = rref(r);
  std::vector<bool> is_piv(a.cols(), false);
  for (auto p : piv) is_piv[p] = true;
  std::size_t nfree = a.cols() - piv.size();
  QMatrix n(a.cols(), nfree);
  std::size_t k = 0;
  for (std::size_t f = 0; f < a.cols(); ++f) {
    if (is_piv[f]) continue;
    n(f, k) = 1;
    for (std::size_t i = 0; i < piv.size(); ++i) n(piv[i], k) = -r(i, f);
    ++k;
  }
  return n;
}

QMatrix inverse(const QMatrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::NotInvertible, "matrix is not square");
  std::size_t n = a.rows();
  QMatrix aug(n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
    aug(i, n + i) = 1;
  }
  auto piv = rref(aug);
  if (piv.size() < n || piv[n - 1] != n - 1) throw Error(ErrorKind::NotInvertible, "singular matrix");
  QMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) inv(i, j) = aug(i, n + j);
  return inv;
}

QMatrix pinv(const QMatrix& a) {
  QMatrix r = a;
  auto piv = rref(r);
  std::size_t k = piv.size();
  if (k == 0) return QMatrix(a.cols(), a.rows());
  // A = C F with C the pivot columns of A and F the nonzero rows of rref(A).
  QMatrix c(a.rows(), k), f(k, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) c(i, j) = a(i, piv[j]);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) f(i, j) = r(i, j);
  QMatrix ft = f.transpose(), ct = c.transpose();
  return ft * inverse(f * ft) * inverse(ct * c) * ct;
}

bool solve(const QMatrix& a, const std::vector<Q>& b, std::vector<Q>& x) {
  QMatrix aug(a.rows(), a.cols() + 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) aug(i, j) = a(i, j);
    aug(i, a.cols()) = b[i];
  }
  auto piv = rref(aug);
  if (!piv.empty() && piv.back() == a.cols()) return false;
  x.assign(a.cols(), Q(0));
  for (std::size_t i = 0; i < piv.size(); ++i) x[piv[i]] = aug(i, a.cols());
  return true;
}

namespace {

// Floor division for the reduction step above a pivot.
Z floor_div(const Z& a, const Z& b) {
  Z q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

}  // namespace

std::vector<ZRow> hermite(std::vector<ZRow> rows) {
  if (rows.empty()) return rows;
  const std::size_t m = rows[0].size();
  std::size_t r = 0;
  for (std::size_t col = 0; col < m && r < rows.size(); ++col) {
    // Euclid on the column below row r until one nonzero entry remains.
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t i = r; i < rows.size(); ++i)
        if (sgn(rows[i][col]) != 0 && (best == rows.size() || abs(rows[i][col]) < abs(rows[best][col]))) best = i;
      if (best == rows.size()) break;
      std::swap(rows[r], rows[best]);
      bool done = true;
      for (std::size_t i = r + 1; i < rows.size(); ++i) {
        if (sgn(rows[i][col]) == 0) continue;
        Z q = rows[i][col] / rows[r][col];  // truncating
        for (std::size_t j = col; j < m; ++j) rows[i][j] -= q * rows[r][j];
        if (sgn(rows[i][col]) != 0) done = false;
      }
      if (done) break;
    }
    if (sgn(rows[r][col]) == 0) continue;
    if (sgn(rows[r][col]) < 0)
      for (auto& v : rows[r]) v = -v;
    for (std::size_t i = 0; i < r; ++i) {
      Z q = floor_div(rows[i][col], rows[r][col]);
      if (sgn(q) != 0)
        for (std::size_t j = col; j < m; ++j) rows[i][j] -= q * rows[r][j];
    }
    ++r;
  }
  rows.resize(r);
  return rows;
}

ZRow primitive(const std::vector<Q>& row) {
  Z l = 1;
  for (const Q& q : row) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  ZRow out(row.size());
  Z g = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    Q s = row[i] * l;
    out[i] = s.get_num();
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), out[i].get_mpz_t());
  }
  if (sgn(g) != 0)
    for (auto& v : out) v /= g;
  return out;
}

std::vector<ZRow> integer_kernel(const QMatrix& a) {
  const std::size_t m = a.cols();
  // Integer constraint rows.
  std::vector<ZRow> c;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::vector<Q> row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = a(i, j);
    c.push_back(primitive(row));
  }
  // Column reduction A U = [H | 0] tracked on U (stored as rows of U^T).
  std::vector<ZRow> ut(m, ZRow(m, Z(0)));
  for (std::size_t j = 0; j < m; ++j) ut[j][j] = 1;
  std::vector<ZRow> cols(m, ZRow(c.size()));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < c.size(); ++i) cols[j][i] = c[i][j];
  std::size_t k = 0;
  for (std::size_t i = 0; i < c.size() && k < m; ++i) {
    while (true) {
      std::size_t best = m;
      for (std::size_t j = k; j < m; ++j)
        if (sgn(cols[j][i]) != 0 && (best == m || abs(cols[j][i]) < abs(cols[best][i]))) best = j;
      if (best == m) break;
      std::swap(cols[k], cols[best]);
      std::swap(ut[k], ut[best]);
      bool done = true;
      for (std::size_t j = k + 1; j < m; ++j) {
        if (sgn(cols[j][i]) == 0) continue;
        Z q = cols[j][i] / cols[k][i];
        for (std::size_t t = 0; t < c.size(); ++t) cols[j][t] -= q * cols[k][t];
        for (std::size_t t = 0; t < m; ++t) ut[j][t] -= q * ut[k][t];
        if (sgn(cols[j][i]) != 0) done = false;
      }
      if (done) break;
    }
    if (sgn(cols[k][i]) != 0) ++k;
  }
  std::vector<ZRow> ker(ut.begin() + static_cast<std::ptrdiff_t>(k), ut.end());
  return hermite(std::move(ker));
}

std::vector<ZRow> saturate(const std::vector<ZRow>& rows, std::size_t m) {
  if (rows.empty()) return {};
  QMatrix a(rows.size(), m);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) a(i, j) = rows[i][j];
  std::vector<ZRow> perp = integer_kernel(a);
  if (perp.empty()) {
    std::vector<ZRow> id(m, ZRow(m, Z(0)));
    for (std::size_t j = 0; j < m; ++j) id[j][j] = 1;
    return id;
  }
  QMatrix b(perp.size(), m);
  for (std::size_t i = 0; i < perp.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) b(i, j) = perp[i][j];
  return integer_kernel(b);
}

}  // namespace liouville::exact
