#include <optional>

#include "liouville/normalform.hpp"

namespace liouville {

namespace detail {
struct FieldData {
  IrrationalBasis basis;
  std::size_t dim = 1;
  std::vector<std::optional<std::vector<Rational>>> table;   // dim x dim, entries with both indices >= 1
  std::vector<std::complex<double>> values;
  const std::optional<std::vector<Rational>>& product(std::size_t a, std::size_t b) const {
    return table[a * dim + b];
  }
};
}  // namespace detail

namespace {

using FieldPtr = std::shared_ptr<const detail::FieldData>;

FieldPtr rational_field() {
  static const FieldPtr q = [] {
    auto d = std::make_shared<detail::FieldData>();
    d->values = {1.0};
    d->table.resize(1);
    return d;
  }();
  return q;
}

std::string base_name(const detail::FieldData& f, std::size_t l) { return l == 0 ? "1" : f.basis[l - 1].name; }

FieldPtr common_field(const Scalar& a, const Scalar& b) {
  if (!a.field()) return b.field();
  if (!b.field() || a.field() == b.field()) return a.field();
  if (b.is_rational()) return a.field();
  if (a.is_rational()) return b.field();
  throw Error(ErrorKind::InvalidArgument, "scalars from different number fields");
}

std::vector<Rational> padded(const Scalar& s, std::size_t dim) {
  std::vector<Rational> c(dim);
  for (std::size_t l = 0; l < dim; ++l) c[l] = s.coeff(l);
  return c;
}

Scalar from_expr_impl(const Expr& e, const NumberField& k) {
  switch (e.op()) {
    case Op::Const: return k.rational(e.value());
    case Op::Named: {
      const auto& b = k.basis();
      for (std::size_t l = 0; l < b.size(); ++l)
        if (b[l].name == e.name()) return k.generator(l + 1);
      throw Error(ErrorKind::FieldTooSmall, "constant '" + e.name() + "' is not in the declared field");
    }
    case Op::Var: throw Error(ErrorKind::InvalidArgument, "coordinate '" + e.name() + "' in a constant");
    case Op::Neg: return -from_expr_impl(e.arg(), k);
    case Op::Add: return from_expr_impl(e.lhs(), k) + from_expr_impl(e.rhs(), k);
    case Op::Sub: return from_expr_impl(e.lhs(), k) - from_expr_impl(e.rhs(), k);
    case Op::Mul: return from_expr_impl(e.lhs(), k) * from_expr_impl(e.rhs(), k);
    case Op::Div: return from_expr_impl(e.lhs(), k) / from_expr_impl(e.rhs(), k);
    case Op::Pow: {
      Scalar base = from_expr_impl(e.arg(), k);
      long n = e.exponent();
      if (n < 0) {
        base = base.inverse();
        n = -n;
      }
      Scalar r = k.one();
      while (n--) r = r * base;
      return r;
    }
    default:
      throw Error(ErrorKind::FieldTooSmall, print(e) + " is not in the declared field");
  }
}

}  // namespace

// ---- NumberField

NumberField::NumberField() : d_(rational_field()) {}

NumberField::NumberField(IrrationalBasis basis, std::span<const ProductRule> table) {
  auto d = std::make_shared<detail::FieldData>();
  d->dim = basis.size() + 1;
  d->values.push_back(1.0);
  for (const auto& c : basis)
    d->values.push_back(c.imaginary ? std::complex<double>(0.0, c.value) : std::complex<double>(c.value, 0.0));
  d->basis = std::move(basis);
  d->table.resize(d->dim * d->dim);
  d_ = d;   // lets the rule values parse against this field (linear combinations only)
  auto index = [&](const std::string& n) {
    for (std::size_t l = 0; l < d->basis.size(); ++l)
      if (d->basis[l].name == n) return l + 1;
    throw Error(ErrorKind::Config, "product rule names undeclared constant '" + n + "'");
  };
  for (const auto& rule : table) {
    const std::size_t a = index(rule.a), b = index(rule.b);
    std::vector<Rational> v = padded(parse(rule.value), d->dim);
    if (d->table[a * d->dim + b] && *d->table[a * d->dim + b] != v)
      throw Error(ErrorKind::Config, "conflicting product rules for " + rule.a + "*" + rule.b);
    d->table[a * d->dim + b] = v;
    d->table[b * d->dim + a] = v;
  }
}

std::size_t NumberField::dim() const { return d_->dim; }
const IrrationalBasis& NumberField::basis() const { return d_->basis; }
std::string NumberField::name(std::size_t l) const { return base_name(*d_, l); }

Scalar NumberField::zero() const { return Scalar(d_, std::vector<Rational>(d_->dim)); }
Scalar NumberField::one() const { return rational(1); }
Scalar NumberField::rational(const Rational& q) const {
  std::vector<Rational> c(d_->dim);
  c[0] = q;
  return Scalar(d_, std::move(c));
}
Scalar NumberField::generator(std::size_t l) const {
  if (l >= d_->dim) throw Error(ErrorKind::InvalidArgument, "generator index out of range");
  std::vector<Rational> c(d_->dim);
  c[l] = 1;
  return Scalar(d_, std::move(c));
}

Scalar NumberField::parse(std::string_view source) const {
  // placeholder coordinate that no identifier can spell
  static const std::vector<std::string> none{" "};
  return from_expr(parse_expr(source, none, d_->basis));
}

Scalar NumberField::from_expr(const Expr& e) const { return from_expr_impl(e, *this); }

// ---- Scalar

Scalar::Scalar(std::shared_ptr<const detail::FieldData> f, std::vector<Rational> c) : f_(std::move(f)), c_(std::move(c)) {}

Scalar::Scalar(long v) : c_{Rational(v)} {}

std::size_t Scalar::dim() const { return f_ ? f_->dim : 1; }

bool Scalar::is_zero() const {
  for (const auto& q : c_)
    if (q != 0) return false;
  return true;
}

bool Scalar::is_rational() const {
  for (std::size_t l = 1; l < c_.size(); ++l)
    if (c_[l] != 0) return false;
  return true;
}

std::complex<double> Scalar::value() const {
  std::complex<double> v = coeff(0).get_d();
  for (std::size_t l = 1; l < c_.size(); ++l)
    if (c_[l] != 0) v += c_[l].get_d() * f_->values[l];
  return v;
}

std::complex<double> Scalar::basis_value(std::size_t l) const {
  if (l == 0) return 1.0;
  if (!f_ || l >= f_->dim) throw Error(ErrorKind::InvalidArgument, "basis index out of range");
  return f_->values[l];
}

std::string Scalar::str() const {
  std::string out;
  for (std::size_t l = 0; l < c_.size(); ++l) {
    if (c_[l] == 0) continue;
    std::string term;
    if (l == 0)
      term = print_rational(c_[l]);
    else if (c_[l] == 1)
      term = base_name(*f_, l);
    else if (c_[l] == -1)
      term = "-" + base_name(*f_, l);
    else
      term = print_rational(c_[l]) + "*" + base_name(*f_, l);
    if (out.empty())
      out = term;
    else if (term[0] == '-')
      out += " - " + term.substr(1);
    else
      out += " + " + term;
  }
  return out.empty() ? "0" : out;
}

Scalar operator+(const Scalar& a, const Scalar& b) {
  FieldPtr f = common_field(a, b);
  const std::size_t d = f ? f->dim : 1;
  std::vector<Rational> c(d);
  for (std::size_t l = 0; l < d; ++l) c[l] = a.coeff(l) + b.coeff(l);
  return Scalar(f, std::move(c));
}

Scalar operator-(const Scalar& a) {
  std::vector<Rational> c(a.c_.size());
  for (std::size_t l = 0; l < c.size(); ++l) c[l] = -a.c_[l];
  return Scalar(a.f_, std::move(c));
}

Scalar operator-(const Scalar& a, const Scalar& b) { return a + (-b); }

Scalar operator*(const Rational& q, const Scalar& a) {
  std::vector<Rational> c(a.c_.size());
  for (std::size_t l = 0; l < c.size(); ++l) c[l] = q * a.c_[l];
  return Scalar(a.f_, std::move(c));
}

Scalar operator*(const Scalar& a, const Scalar& b) {
  if (a.is_rational()) return a.coeff(0) * b;
  if (b.is_rational()) return b.coeff(0) * a;
  FieldPtr f = common_field(a, b);
  const std::size_t d = f->dim;
  std::vector<Rational> c(d);
  c[0] = a.coeff(0) * b.coeff(0);
  for (std::size_t l = 1; l < d; ++l) {
    c[l] += a.coeff(0) * b.coeff(l);
    c[l] += a.coeff(l) * b.coeff(0);
  }
  for (std::size_t i = 1; i < d; ++i) {
    if (a.coeff(i) == 0) continue;
    for (std::size_t j = 1; j < d; ++j) {
      if (b.coeff(j) == 0) continue;
      const auto& p = f->product(i, j);
      if (!p)
        throw Error(ErrorKind::FieldTooSmall,
                    "product " + base_name(*f, i) + "*" + base_name(*f, j) + " is not declared");
      const Rational w = a.coeff(i) * b.coeff(j);
      for (std::size_t l = 0; l < d; ++l) c[l] += w * (*p)[l];
    }
  }
  return Scalar(f, std::move(c));
}

bool operator==(const Scalar& a, const Scalar& b) {
  const std::size_t d = std::max(a.c_.size(), b.c_.size());
  for (std::size_t l = 0; l < d; ++l)
    if (a.coeff(l) != b.coeff(l)) return false;
  return true;
}

Scalar Scalar::inverse() const {
  if (is_zero()) throw Error(ErrorKind::NotInvertible, "division by zero");
  if (is_rational()) {
    std::vector<Rational> c(dim());
    c[0] = 1 / coeff(0);
    return Scalar(f_, std::move(c));
  }
  // solve (this * y) = 1 through the multiplication matrix
  const std::size_t d = f_->dim;
  exact::QMatrix m(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<Rational> e(d);
    e[k] = 1;
    Scalar col = *this * Scalar(f_, std::move(e));
    for (std::size_t l = 0; l < d; ++l) m(l, k) = col.coeff(l);
  }
  std::vector<Rational> rhs(d), y;
  rhs[0] = 1;
  if (!exact::solve(m, rhs, y)) throw Error(ErrorKind::NotInvertible, str() + " has no inverse in the declared field");
  Scalar inv(f_, y);
  if (!(*this * inv == Scalar(1))) throw Error(ErrorKind::NotInvertible, str() + " has no inverse in the declared field");
  return inv;
}

// ---- KMatrix

KMatrix KMatrix::identity(std::size_t n) {
  KMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

KMatrix KMatrix::diagonal(std::span<const Scalar> d) {
  KMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

KMatrix KMatrix::from_rational(const exact::QMatrix& q) {
  KMatrix m(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) m(i, j) = Scalar(nullptr, {q(i, j)});
  return m;
}

bool KMatrix::is_zero() const {
  for (const auto& s : d_)
    if (!s.is_zero()) return false;
  return true;
}

bool KMatrix::is_diagonal() const {
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j)
      if (i != j && !(*this)(i, j).is_zero()) return false;
  return true;
}

KMatrix KMatrix::transpose() const {
  KMatrix t(c_, r_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

KMatrix operator*(const KMatrix& a, const KMatrix& b) {
  if (a.c_ != b.r_) throw Error(ErrorKind::InvalidArgument, "matrix size mismatch");
  KMatrix m(a.r_, b.c_);
  for (std::size_t i = 0; i < a.r_; ++i)
    for (std::size_t k = 0; k < a.c_; ++k) {
      if (a(i, k).is_zero()) continue;
      for (std::size_t j = 0; j < b.c_; ++j)
        if (!b(k, j).is_zero()) m(i, j) += a(i, k) * b(k, j);
    }
  return m;
}

KMatrix operator+(const KMatrix& a, const KMatrix& b) {
  KMatrix m(a.r_, a.c_);
  for (std::size_t i = 0; i < a.d_.size(); ++i) m.d_[i] = a.d_[i] + b.d_[i];
  return m;
}

KMatrix operator-(const KMatrix& a, const KMatrix& b) {
  KMatrix m(a.r_, a.c_);
  for (std::size_t i = 0; i < a.d_.size(); ++i) m.d_[i] = a.d_[i] - b.d_[i];
  return m;
}

bool operator==(const KMatrix& a, const KMatrix& b) {
  if (a.r_ != b.r_ || a.c_ != b.c_) return false;
  for (std::size_t i = 0; i < a.d_.size(); ++i)
    if (!(a.d_[i] == b.d_[i])) return false;
  return true;
}

std::vector<std::size_t> rref(KMatrix& a) {
  std::vector<std::size_t> piv;
  std::size_t r = 0;
  for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
    std::size_t p = r;
    while (p < a.rows() && a(p, c).is_zero()) ++p;
    if (p == a.rows()) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(p, j), a(r, j));
    const Scalar inv = a(r, c).inverse();
    for (std::size_t j = 0; j < a.cols(); ++j) a(r, j) = a(r, j) * inv;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (i == r || a(i, c).is_zero()) continue;
      const Scalar f = a(i, c);
      for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= f * a(r, j);
    }
    piv.push_back(c);
    ++r;
  }
  return piv;
}

KMatrix nullspace(const KMatrix& a) {
  KMatrix r = a;
  auto piv = rref(r);
  std::vector<bool> is_piv(a.cols(), false);
  for (auto c : piv) is_piv[c] = true;
  KMatrix out(a.cols(), a.cols() - piv.size());
  std::size_t col = 0;
  for (std::size_t f = 0; f < a.cols(); ++f) {
    if (is_piv[f]) continue;
    out(f, col) = 1;
    for (std::size_t i = 0; i < piv.size(); ++i) out(piv[i], col) = -r(i, f);
    ++col;
  }
  return out;
}

KMatrix inverse(const KMatrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorKind::NotInvertible, "matrix is not square");
  KMatrix aug(n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
    aug(i, n + i) = 1;
  }
  auto piv = rref(aug);
  if (piv.size() < n || piv[n - 1] != n - 1) throw Error(ErrorKind::NotInvertible, "matrix is singular");
  KMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) inv(i, j) = aug(i, n + j);
  return inv;
}

KMatrix canonical_structure(std::size_t n) {
  KMatrix pi(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    pi(i, n + i) = 1;
    pi(n + i, i) = -1;
  }
  return pi;
}

}  // namespace liouville
