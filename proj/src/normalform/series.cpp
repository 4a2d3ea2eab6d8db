#include <algorithm>
#include <numeric>
#include <sstream>

#include "liouville/normalform.hpp"

namespace liouville {

int degree(const Exponent& k) { return std::accumulate(k.begin(), k.end(), 0); }

FormalSeries FormalSeries::variable(std::size_t nvars, int truncation, std::size_t j) {
  FormalSeries s(nvars, truncation);
  Exponent k(nvars, 0);
  k[j] = 1;
  s.add_term(k, Scalar(1));
  return s;
}

FormalSeries FormalSeries::constant(std::size_t nvars, int truncation, const Scalar& c) {
  FormalSeries s(nvars, truncation);
  s.add_term(Exponent(nvars, 0), c);
  return s;
}

Scalar FormalSeries::coeff(const Exponent& k) const {
  auto it = t_.find(k);
  return it == t_.end() ? Scalar() : it->second;
}

void FormalSeries::add_term(const Exponent& k, const Scalar& c) {
  if (k.size() != m_) throw Error(ErrorKind::InvalidArgument, "exponent length does not match the series");
  if (degree(k) > n_ || c.is_zero()) return;
  auto [it, fresh] = t_.try_emplace(k, c);
  if (!fresh) {
    it->second += c;
    if (it->second.is_zero()) t_.erase(it);
  }
}

FormalSeries FormalSeries::degree_part(int d) const {
  FormalSeries s(m_, n_);
  for (const auto& [k, c] : t_)
    if (degree(k) == d) s.t_.emplace(k, c);
  return s;
}

FormalSeries FormalSeries::truncated(int n) const {
  FormalSeries s(m_, n);
  for (const auto& [k, c] : t_)
    if (degree(k) <= n) s.t_.emplace(k, c);
  return s;
}

int FormalSeries::max_degree() const {
  int d = -1;
  for (const auto& [k, c] : t_) d = std::max(d, degree(k));
  return d;
}

FormalSeries FormalSeries::derivative(std::size_t j) const {
  FormalSeries s(m_, n_);
  for (const auto& [k, c] : t_) {
    if (k[j] == 0) continue;
    Exponent e = k;
    --e[j];
    s.add_term(e, Rational(k[j]) * c);
  }
  return s;
}

FormalSeries operator+(const FormalSeries& a, const FormalSeries& b) {
  FormalSeries s = a.m_ ? a : FormalSeries(b.m_, b.n_);
  for (const auto& [k, c] : b.t_) s.add_term(k, c);
  return s;
}

FormalSeries operator-(const FormalSeries& a, const FormalSeries& b) {
  FormalSeries s = a.m_ ? a : FormalSeries(b.m_, b.n_);
  for (const auto& [k, c] : b.t_) s.add_term(k, -c);
  return s;
}

FormalSeries operator*(const FormalSeries& a, const FormalSeries& b) {
  const int n = std::min(a.n_, b.n_);
  FormalSeries s(a.m_, n);
  Exponent e(a.m_);
  for (const auto& [ka, ca] : a.t_) {
    const int da = degree(ka);
    for (const auto& [kb, cb] : b.t_) {
      if (da + degree(kb) > n) continue;
      for (std::size_t j = 0; j < a.m_; ++j) e[j] = ka[j] + kb[j];
      s.add_term(e, ca * cb);
    }
  }
  return s;
}

FormalSeries operator*(const Scalar& c, const FormalSeries& a) {
  FormalSeries s(a.m_, a.n_);
  if (c.is_zero()) return s;
  for (const auto& [k, v] : a.t_) s.add_term(k, c * v);
  return s;
}

FormalSeries apply(const VectorSeries& x, const FormalSeries& f) {
  FormalSeries s(f.nvars(), f.truncation());
  for (std::size_t a = 0; a < x.size(); ++a)
    if (!x[a].is_zero()) s += x[a] * f.derivative(a);
  return s;
}

VectorSeries lie_bracket(const VectorSeries& x, const VectorSeries& y) {
  VectorSeries out(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) out[a] = apply(x, y[a]) - apply(y, x[a]);
  return out;
}

FormalSeries poisson_bracket(const FormalSeries& a, const FormalSeries& b, const KMatrix& pi) {
  const std::size_t m = a.nvars();
  std::vector<FormalSeries> da(m), db(m);
  for (std::size_t i = 0; i < m; ++i) {
    da[i] = a.derivative(i);
    db[i] = b.derivative(i);
  }
  FormalSeries s(m, std::min(a.truncation(), b.truncation()));
  for (std::size_t i = 0; i < m; ++i) {
    if (da[i].is_zero()) continue;
    FormalSeries row(m, s.truncation());
    for (std::size_t j = 0; j < m; ++j)
      if (!pi(i, j).is_zero()) row += pi(i, j) * db[j];
    if (!row.is_zero()) s += da[i] * row;
  }
  return s;
}

FormalSeries substitute_linear(const FormalSeries& f, const KMatrix& p) {
  const std::size_t m = f.nvars();
  const int n = f.truncation();
  // x_i = sum_j P_ij u_j
  std::vector<FormalSeries> x(m, FormalSeries(m, n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (!p(i, j).is_zero()) x[i].add_term([&] { Exponent e(m, 0); e[j] = 1; return e; }(), p(i, j));
  // cached powers x_i^e
  std::vector<std::vector<FormalSeries>> pw(m);
  for (std::size_t i = 0; i < m; ++i) pw[i].push_back(FormalSeries::constant(m, n, Scalar(1)));
  FormalSeries s(m, n);
  for (const auto& [k, c] : f.terms()) {
    FormalSeries t = FormalSeries::constant(m, n, c);
    for (std::size_t i = 0; i < m; ++i) {
      while (static_cast<int>(pw[i].size()) <= k[i]) pw[i].push_back(pw[i].back() * x[i]);
      if (k[i]) t = t * pw[i][static_cast<std::size_t>(k[i])];
    }
    s += t;
  }
  return s;
}

bool is_zero(const VectorSeries& x) {
  return std::all_of(x.begin(), x.end(), [](const FormalSeries& s) { return s.is_zero(); });
}

namespace {

FormalSeries from_expr_impl(const Expr& e, std::size_t m, int n, const NumberField& k) {
  if (e.is_constant_valued()) return FormalSeries::constant(m, n, k.from_expr(e));
  switch (e.op()) {
    case Op::Var:
      if (e.var() >= m) throw Error(ErrorKind::InvalidArgument, "variable index out of range");
      return FormalSeries::variable(m, n, e.var());
    case Op::Neg: return Scalar(-1) * from_expr_impl(e.arg(), m, n, k);
    case Op::Add: return from_expr_impl(e.lhs(), m, n, k) + from_expr_impl(e.rhs(), m, n, k);
    case Op::Sub: return from_expr_impl(e.lhs(), m, n, k) - from_expr_impl(e.rhs(), m, n, k);
    case Op::Mul: return from_expr_impl(e.lhs(), m, n, k) * from_expr_impl(e.rhs(), m, n, k);
    case Op::Div:
      if (!e.rhs().is_constant_valued())
        throw Error(ErrorKind::InvalidArgument, "division by a non-constant in " + print(e));
      return k.from_expr(e.rhs()).inverse() * from_expr_impl(e.lhs(), m, n, k);
    case Op::Pow: {
      if (e.exponent() < 0) throw Error(ErrorKind::InvalidArgument, "negative power of a coordinate in " + print(e));
      FormalSeries base = from_expr_impl(e.arg(), m, n, k);
      FormalSeries r = FormalSeries::constant(m, n, Scalar(1));
      for (long i = 0; i < e.exponent(); ++i) r = r * base;
      return r;
    }
    default:
      throw Error(ErrorKind::InvalidArgument, print(e) + " is not a polynomial");
  }
}

bool graded_less(const Exponent& a, const Exponent& b) {
  const int da = degree(a), db = degree(b);
  if (da != db) return da < db;
  return a > b;
}

}  // namespace

FormalSeries series_from_expr(const Expr& e, std::size_t nvars, int truncation, const NumberField& field) {
  return from_expr_impl(e, nvars, truncation, field);
}

std::string series_to_text(const FormalSeries& f) {
  std::vector<const std::pair<const Exponent, Scalar>*> rows;
  for (const auto& t : f.terms()) rows.push_back(&t);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return graded_less(a->first, b->first); });
  std::string out;
  for (const auto* t : rows) {
    for (std::size_t j = 0; j < t->first.size(); ++j) out += (j ? " " : "") + std::to_string(t->first[j]);
    out += " : " + t->second.str() + "\n";
  }
  return out;
}

FormalSeries series_from_text(std::string_view text, std::size_t nvars, int truncation, const NumberField& field) {
  FormalSeries s(nvars, truncation);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorKind::Syntax, "series line " + std::to_string(lineno) + " has no ':'");
    std::istringstream ks(line.substr(0, colon));
    Exponent k;
    int v = 0;
    while (ks >> v) {
      if (v < 0) throw Error(ErrorKind::Syntax, "negative exponent on series line " + std::to_string(lineno));
      k.push_back(v);
    }
    if (!ks.eof() || k.size() != nvars)
      throw Error(ErrorKind::Syntax, "series line " + std::to_string(lineno) + " needs " + std::to_string(nvars) +
                                         " integer exponents");
    s.add_term(k, field.parse(line.substr(colon + 1)));
  }
  return s;
}

}  // namespace liouville
