#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "liouville/normalform.hpp"

namespace liouville {

namespace {

using Poly = std::vector<Scalar>;   // low to high

void trim(Poly& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

Poly derivative(const Poly& p) {
  Poly d;
  for (std::size_t k = 1; k < p.size(); ++k) d.push_back(Rational(static_cast<long>(k)) * p[k]);
  trim(d);
  return d;
}

// a = q b + r
void divmod(Poly a, const Poly& b, Poly& q, Poly& r) {
  trim(a);
  q.assign(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, Scalar());
  const Scalar lead = b.back().inverse();
  while (a.size() >= b.size() && !a.empty()) {
    const std::size_t shift = a.size() - b.size();
    const Scalar c = a.back() * lead;
    q[shift] = c;
    for (std::size_t k = 0; k < b.size(); ++k) a[shift + k] -= c * b[k];
    a.pop_back();
    trim(a);
  }
  r = a;
}

Poly gcd(Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly q, r;
    divmod(a, b, q, r);
    a = std::move(b);
    b = std::move(r);
  }
  const Scalar inv = a.back().inverse();
  for (auto& c : a) c = c * inv;
  return a;
}

Scalar eval(const Poly& p, const Scalar& x) {
  Scalar v;
  for (std::size_t k = p.size(); k-- > 0;) v = v * x + p[k];
  return v;
}

std::string poly_str(const Poly& p) {
  std::string out;
  for (std::size_t k = p.size(); k-- > 0;) {
    if (p[k].is_zero()) continue;
    if (!out.empty()) out += " + ";
    out += "(" + p[k].str() + ")";
    if (k) out += k == 1 ? "*t" : "*t^" + std::to_string(k);
  }
  return out;
}

// Faddeev-LeVerrier: det(t I - A), monic.
Poly charpoly(const KMatrix& a) {
  const std::size_t n = a.rows();
  Poly c(n + 1);
  c[n] = 1;
  KMatrix m(n, n);
  for (std::size_t k = 1; k <= n; ++k) {
    m = a * m;
    for (std::size_t i = 0; i < n; ++i) m(i, i) += c[n - k + 1];
    KMatrix am = a * m;
    Scalar tr;
    for (std::size_t i = 0; i < n; ++i) tr += am(i, i);
    c[n - k] = Rational(-1, static_cast<long>(k)) * tr;
  }
  return c;
}

// ---- integer relations

using QRow = std::vector<Rational>;

Rational dot(const QRow& a, const QRow& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void gram_schmidt(const std::vector<QRow>& b, std::vector<QRow>& bs, std::vector<QRow>& mu, QRow& norm) {
  const std::size_t n = b.size();
  bs = b;
  mu.assign(n, QRow(n));
  norm.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      mu[i][j] = norm[j] == 0 ? Rational(0) : dot(b[i], bs[j]) / norm[j];
      for (std::size_t k = 0; k < bs[i].size(); ++k) bs[i][k] -= mu[i][j] * bs[j][k];
    }
    norm[i] = dot(bs[i], bs[i]);
  }
}

Rational round_half(const Rational& q) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), mpq_class(q + Rational(1, 2)).get_num_mpz_t(), mpq_class(q + Rational(1, 2)).get_den_mpz_t());
  return Rational(f);
}

void lll(std::vector<QRow>& b) {
  const Rational delta(3, 4);
  std::vector<QRow> bs, mu;
  QRow norm;
  gram_schmidt(b, bs, mu, norm);
  std::size_t k = 1;
  int guard = 0;
  while (k < b.size() && ++guard < 100000) {
    for (std::size_t j = k; j-- > 0;) {
      const Rational q = round_half(mu[k][j]);
      if (q == 0) continue;
      for (std::size_t c = 0; c < b[k].size(); ++c) b[k][c] -= q * b[j][c];
      gram_schmidt(b, bs, mu, norm);
    }
    if (norm[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norm[k - 1]) {
      ++k;
    } else {
      std::swap(b[k], b[k - 1]);
      gram_schmidt(b, bs, mu, norm);
      k = std::max<std::size_t>(k - 1, 1);
    }
  }
}

// Field element gamma with numeric value lambda and p(gamma) = 0, if any.
bool identify(std::complex<double> lambda, const Poly& p, const NumberField& k, Scalar& out) {
  const std::size_t d = k.dim();
  std::vector<std::complex<double>> x{lambda};
  for (std::size_t l = 0; l < d; ++l) x.push_back(k.generator(l).value());
  const double scale = 1e10 / std::max(1.0, std::abs(lambda));
  std::vector<QRow> b(x.size(), QRow(x.size() + 2));
  for (std::size_t i = 0; i < x.size(); ++i) {
    b[i][i] = 1;
    b[i][x.size()] = Rational(static_cast<long>(std::llround(scale * x[i].real())));
    b[i][x.size() + 1] = Rational(static_cast<long>(std::llround(scale * x[i].imag())));
  }
  lll(b);
  for (const auto& row : b) {
    if (row[0] == 0) continue;
    Scalar g;
    for (std::size_t l = 0; l < d; ++l) g += (-row[l + 1] / row[0]) * k.generator(l);
    if (eval(p, g).is_zero()) {
      out = g;
      return true;
    }
  }
  return false;
}

bool triangular(const KMatrix& a) {
  bool upper = true, lower = true;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i > j && !a(i, j).is_zero()) upper = false;
      if (i < j && !a(i, j).is_zero()) lower = false;
    }
  return upper || lower;
}

KMatrix power(const KMatrix& a, std::size_t e) {
  KMatrix r = KMatrix::identity(a.rows());
  while (e--) r = r * a;
  return r;
}

}  // namespace

LinearPart split_linear(const KMatrix& a, const NumberField& field) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorKind::InvalidArgument, "linear part must be square");
  std::vector<Scalar> distinct;
  std::vector<std::size_t> mult;
  if (triangular(a)) {
    for (std::size_t i = 0; i < n; ++i) {
      auto it = std::find(distinct.begin(), distinct.end(), a(i, i));
      if (it == distinct.end()) {
        distinct.push_back(a(i, i));
        mult.push_back(1);
      } else {
        ++mult[static_cast<std::size_t>(it - distinct.begin())];
      }
    }
  } else {
    Poly chi = charpoly(a);
    Poly q, r;
    divmod(chi, gcd(chi, derivative(chi)), q, r);
    Poly sqf = q;
    const std::size_t d = sqf.size() - 1;
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const std::complex<double> lead = sqf.back().value();
    for (std::size_t i = 0; i < d; ++i) {
      if (i + 1 < d) comp(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
      comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d - 1)) = -sqf[i].value() / lead;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp);
    std::vector<std::complex<double>> roots(es.eigenvalues().data(), es.eigenvalues().data() + d);
    std::sort(roots.begin(), roots.end(), [](auto x, auto y) {
      return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    Poly rest = sqf;
    for (auto lambda : roots) {
      Scalar g;
      if (!identify(lambda, sqf, field, g) || std::find(distinct.begin(), distinct.end(), g) != distinct.end())
        continue;
      distinct.push_back(g);
      Poly lin{-g, Scalar(1)};
      std::size_t m = 0;
      Poly c = chi;
      for (;;) {
        divmod(c, lin, q, r);
        if (!r.empty()) break;
        c = q;
        ++m;
      }
      mult.push_back(m);
      divmod(rest, lin, q, r);
      rest = q;
    }
    if (rest.size() > 1)
      throw Error(ErrorKind::FieldTooSmall,
                  "characteristic polynomial does not split over the declared field; factor " + poly_str(rest));
    // order by numeric value for a reproducible frame
    std::vector<std::size_t> ord(distinct.size());
    for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](std::size_t x, std::size_t y) {
      auto vx = distinct[x].value(), vy = distinct[y].value();
      return vx.real() != vy.real() ? vx.real() < vy.real() : vx.imag() < vy.imag();
    });
    std::vector<Scalar> d2;
    std::vector<std::size_t> m2;
    for (auto i : ord) {
      d2.push_back(distinct[i]);
      m2.push_back(mult[i]);
    }
    distinct = std::move(d2);
    mult = std::move(m2);
  }

  LinearPart lp;
  lp.a = a;
  lp.basis = KMatrix(n, n);
  std::size_t col = 0;
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    KMatrix shifted = a;
    for (std::size_t j = 0; j < n; ++j) shifted(j, j) -= distinct[i];
    KMatrix v = nullspace(power(shifted, mult[i]));
    if (v.cols() != mult[i])
      throw Error(ErrorKind::InvalidArgument, "generalized eigenspace has the wrong dimension");
    for (std::size_t c = 0; c < v.cols(); ++c, ++col) {
      for (std::size_t r = 0; r < n; ++r) lp.basis(r, col) = v(r, c);
      lp.eigenvalues.push_back(distinct[i]);
    }
  }
  lp.s = lp.basis * KMatrix::diagonal(lp.eigenvalues) * inverse(lp.basis);
  lp.n = a - lp.s;
  lp.semisimple = lp.n.is_zero();
  return lp;
}

}  // namespace liouville
