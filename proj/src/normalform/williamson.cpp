#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "liouville/normalform.hpp"

namespace liouville {

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Elliptic: return "elliptic";
    case BlockKind::Hyperbolic: return "hyperbolic";
    case BlockKind::FocusFocus: return "focus-focus";
  }
  return "?";
}

namespace {

using QPoly = std::vector<Scalar>;   // low to high; real coefficients

void trim(QPoly& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

QPoly deriv(const QPoly& p) {
  QPoly d;
  for (std::size_t k = 1; k < p.size(); ++k) d.push_back(Rational(static_cast<long>(k)) * p[k]);
  trim(d);
  return d;
}

void divmod(QPoly a, const QPoly& b, QPoly& q, QPoly& r) {
  trim(a);
  q.assign(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, Scalar());
  const Scalar inv = b.back().inverse();
  while (a.size() >= b.size() && !a.empty()) {
    const std::size_t s = a.size() - b.size();
    const Scalar c = a.back() * inv;
    q[s] = c;
    for (std::size_t k = 0; k < b.size(); ++k) a[s + k] -= c * b[k];
    a.pop_back();
    trim(a);
  }
  r = a;
}

QPoly gcd(QPoly a, QPoly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    QPoly q, r;
    divmod(a, b, q, r);
    a = std::move(b);
    b = std::move(r);
  }
  const Scalar inv = a.back().inverse();
  for (auto& c : a) c = c * inv;
  return a;
}

QPoly quo(const QPoly& a, const QPoly& b) {
  QPoly q, r;
  divmod(a, b, q, r);
  return q;
}

// Yun: p = prod_i f_i^i with f_i squarefree and coprime.
std::vector<QPoly> squarefree_factors(const QPoly& p) {
  std::vector<QPoly> out;
  auto minus = [](const QPoly& x, const QPoly& y) {
    QPoly d = x;
    d.resize(std::max(x.size(), y.size()));
    for (std::size_t k = 0; k < y.size(); ++k) d[k] -= y[k];
    trim(d);
    return d;
  };
  QPoly a = gcd(p, deriv(p));
  QPoly b = quo(p, a);
  QPoly d = minus(quo(deriv(p), a), deriv(b));
  while (b.size() > 1) {
    QPoly g = gcd(b, d);
    out.push_back(g);
    b = quo(b, g);
    d = minus(quo(d, g), deriv(b));
  }
  return out;
}

// Exact zero test, sign from the numeric value. Elements of a real field are
// nonzero here, so only near-cancellation can make the double unreliable.
int sign(const Scalar& x) {
  if (x.is_zero()) return 0;
  const double v = x.value().real();
  double scale = 0.0;
  for (std::size_t l = 0; l < x.dim(); ++l) {
    const double beta = l == 0 ? 1.0 : std::abs(x.basis_value(l));
    scale += std::abs(x.coeff(l).get_d()) * beta;
  }
  if (std::abs(v) <= 1e-12 * scale)
    throw Error(ErrorKind::InvalidArgument, "sign of " + x.str() + " is not decidable in double precision");
  return v > 0 ? 1 : -1;
}

// Sign changes of the Sturm sequence at -inf (-1), 0 (0) or +inf (+1).
int variations(const std::vector<QPoly>& seq, int where) {
  int v = 0, last = 0;
  for (const auto& p : seq) {
    int s = 0;
    if (where == 0)
      s = p.empty() ? 0 : sign(p[0]);
    else
      s = sign(p.back()) * ((where < 0 && (p.size() - 1) % 2) ? -1 : 1);
    if (s == 0) continue;
    if (last != 0 && s != last) ++v;
    last = s;
  }
  return v;
}

std::vector<QPoly> sturm(const QPoly& p) {
  std::vector<QPoly> seq{p, deriv(p)};
  while (seq.back().size() > 1) {
    QPoly q, r;
    divmod(seq[seq.size() - 2], seq.back(), q, r);
    if (r.empty()) break;
    for (auto& c : r) c = -c;
    seq.push_back(r);
  }
  return seq;
}

std::vector<std::complex<double>> numeric_roots(const QPoly& p) {
  const std::size_t d = p.size() - 1;
  if (d == 0) return {};
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (i + 1 < d) comp(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
    comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d - 1)) = -(p[i] / p[d]).value();
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp);
  return {es.eigenvalues().data(), es.eigenvalues().data() + d};
}

bool is_real(const Scalar& c) {
  for (std::size_t l = 1; l < c.dim(); ++l)
    if (c.coeff(l) != 0 && c.basis_value(l).imag() != 0.0) return false;
  return true;
}

}  // namespace

WilliamsonType williamson_classify(const FormalSeries& h2) {
  const std::size_t m = h2.nvars();
  if (m % 2) throw Error(ErrorKind::InvalidArgument, "canonical coordinates need an even number of variables");
  const std::size_t n = m / 2;
  KMatrix hess(m, m);
  for (const auto& [k, c] : h2.terms()) {
    if (degree(k) != 2) throw Error(ErrorKind::InvalidArgument, "Williamson classification takes a quadratic form");
    if (!is_real(c)) throw Error(ErrorKind::InvalidArgument, "Williamson classification needs real coefficients");
    for (std::size_t i = 0; i < m; ++i) {
      if (k[i] == 2) hess(i, i) = Rational(2) * c;
      for (std::size_t j = 0; j < m; ++j)
        if (i != j && k[i] == 1 && k[j] == 1) hess(i, j) = c;
    }
  }
  const KMatrix a = canonical_structure(n).transpose() * hess;

  // characteristic polynomial by Faddeev-LeVerrier
  QPoly chi(m + 1);
  chi[m] = Scalar(1);
  KMatrix mk(m, m);
  for (std::size_t k = 1; k <= m; ++k) {
    mk = a * mk;
    for (std::size_t i = 0; i < m; ++i) mk(i, i) += chi[m - k + 1];
    const KMatrix am = a * mk;
    Scalar tr;
    for (std::size_t i = 0; i < m; ++i) tr += am(i, i);
    chi[m - k] = Rational(-1, static_cast<long>(k)) * tr;
  }
  if (chi[0].is_zero()) throw Error(ErrorKind::DegenerateQuadraticPart, "linearization has a zero eigenvalue");
  // semisimple iff the squarefree part annihilates A
  const QPoly sqf = quo(chi, gcd(chi, deriv(chi)));
  KMatrix acc(m, m);
  for (std::size_t k = sqf.size(); k-- > 0;) {
    acc = acc * a;
    for (std::size_t i = 0; i < m; ++i) acc(i, i) += sqf[k];
  }
  if (!acc.is_zero())
    throw Error(ErrorKind::UnresolvedMultiplicity, "linearization is not semisimple; blocks cannot be separated");

  // chi(t) = q(t^2)
  QPoly q;
  for (std::size_t k = 0; k <= m; k += 2) q.push_back(chi[k]);
  WilliamsonType w;
  std::size_t mult = 0;
  for (const auto& f : squarefree_factors(q)) {
    ++mult;
    if (f.size() <= 1) continue;
    const auto seq = sturm(f);
    const std::size_t neg = static_cast<std::size_t>(variations(seq, -1) - variations(seq, 0));
    const std::size_t pos = static_cast<std::size_t>(variations(seq, 0) - variations(seq, 1));
    const std::size_t cplx = (f.size() - 1 - neg - pos) / 2;
    w.ke += mult * neg;
    w.kh += mult * pos;
    w.kf += mult * cplx;
    // representatives for the report
    auto roots = numeric_roots(f);
    std::sort(roots.begin(), roots.end(), [](auto x, auto y) {
      return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    std::vector<std::complex<double>> re, cx;
    for (auto s : roots) (std::abs(s.imag()) <= 1e-9 * std::max(1.0, std::abs(s)) ? re : cx).push_back(s);
    for (std::size_t rep = 0; rep < mult; ++rep) {
      for (auto s : re) {
        if (s.real() < 0)
          w.blocks.push_back({BlockKind::Elliptic, {0.0, std::sqrt(-s.real())}});
        else
          w.blocks.push_back({BlockKind::Hyperbolic, {std::sqrt(s.real()), 0.0}});
      }
      for (auto s : cx)
        if (s.imag() > 0) {
          auto t = std::sqrt(s);
          w.blocks.push_back({BlockKind::FocusFocus, {std::abs(t.real()), std::abs(t.imag())}});
        }
    }
  }
  std::stable_sort(w.blocks.begin(), w.blocks.end(),
                   [](const auto& x, const auto& y) { return static_cast<int>(x.kind) < static_cast<int>(y.kind); });
  if (w.ke + w.kh + 2 * w.kf != n)
    throw Error(ErrorKind::UnresolvedMultiplicity, "eigenvalue count does not match the degrees of freedom");
  return w;
}

std::size_t real_toric_degree(const WilliamsonType& w) { return w.ke + w.kf; }

}  // namespace liouville
