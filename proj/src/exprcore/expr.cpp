#include "liouville/expr.hpp"

#include <cmath>
#include <limits>

namespace liouville {

struct Expr::Node {
  Op op = Op::Const;
  Rational q;
  std::string name;
  std::string decimal;
  double nval = 0.0;
  bool imaginary = false;
  std::size_t var = 0;
  long exponent = 0;
  std::size_t var_bound = 0;
  Expr a = Expr(std::shared_ptr<const Node>());
  Expr b = Expr(std::shared_ptr<const Node>());
};

namespace {

const std::shared_ptr<const Expr::Node>& zero_node() {
  static const auto z = std::make_shared<const Expr::Node>();
  return z;
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::NonIntegerExponent: return "NonIntegerExponent";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::InconsistentSystem: return "InconsistentSystem";
    case ErrorKind::NotStructurePreserving: return "NotStructurePreserving";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::DomainExit: return "DomainExit";
    case ErrorKind::NoReturnFound: return "NoReturnFound";
    case ErrorKind::DegenerateSeed: return "DegenerateSeed";
    case ErrorKind::DimensionBound: return "DimensionBound";
    case ErrorKind::PrimitiveMismatch: return "PrimitiveMismatch";
    case ErrorKind::PathInconsistency: return "PathInconsistency";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::RankUnstable: return "RankUnstable";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::NotConformal: return "NotConformal";
    case ErrorKind::FieldTooSmall: return "FieldTooSmall";
    case ErrorKind::NotInvertible: return "NotInvertible";
    case ErrorKind::DegenerateQuadraticPart: return "DegenerateQuadraticPart";
    case ErrorKind::UnresolvedMultiplicity: return "UnresolvedMultiplicity";
    case ErrorKind::MissingBlock: return "MissingBlock";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

bool is_unary(Op op) {
  return op == Op::Neg || op == Op::Sin || op == Op::Cos || op == Op::Exp || op == Op::Log ||
         op == Op::Sqrt;
}

bool is_binary(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

Expr::Expr() : node_(zero_node()) {}

Expr Expr::constant(Rational value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  value.canonicalize();
  n->q = std::move(value);
  return Expr(std::move(n));
}

Expr Expr::named(const NamedConstant& c) {
  auto n = std::make_shared<Node>();
  n->op = Op::Named;
  n->name = c.name;
  n->decimal = c.decimal;
  n->nval = c.value;
  n->imaginary = c.imaginary;
  return Expr(std::move(n));
}

Expr Expr::variable(std::size_t index, std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  n->name = std::move(name);
  n->var_bound = index + 1;
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr arg) {
  if (!is_unary(op)) throw Error(ErrorKind::InvalidArgument, "not a unary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->var_bound = arg.node_->var_bound;
  n->a = std::move(arg);
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw Error(ErrorKind::InvalidArgument, "not a binary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->var_bound = std::max(lhs.node_->var_bound, rhs.node_->var_bound);
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, long exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->exponent = exponent;
  n->var_bound = base.node_->var_bound;
  n->a = std::move(base);
  return Expr(std::move(n));
}

Op Expr::op() const { return node_->op; }
const Rational& Expr::value() const { return node_->q; }
const std::string& Expr::name() const { return node_->name; }
double Expr::named_value() const { return node_->nval; }
bool Expr::imaginary() const { return node_->imaginary; }
const std::string& Expr::decimal() const { return node_->decimal; }
std::size_t Expr::var() const { return node_->var; }
long Expr::exponent() const { return node_->exponent; }

const Expr& Expr::arg() const { return node_->a; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

bool Expr::is_zero() const { return op() == Op::Const && sgn(value()) == 0; }
bool Expr::is_one() const { return op() == Op::Const && value() == 1; }
bool Expr::is_constant_valued() const { return node_->var_bound == 0; }
std::size_t Expr::var_bound() const { return node_->var_bound; }

int compare(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return 0;
  if (a.op() != b.op()) return a.op() < b.op() ? -1 : 1;
  switch (a.op()) {
    case Op::Const: return cmp(a.value(), b.value()) < 0 ? -1 : (cmp(a.value(), b.value()) > 0 ? 1 : 0);
    case Op::Named: return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
    case Op::Var: return a.var() < b.var() ? -1 : (a.var() > b.var() ? 1 : 0);
    case Op::Pow: {
      int c = compare(a.arg(), b.arg());
      if (c != 0) return c;
      return a.exponent() < b.exponent() ? -1 : (a.exponent() > b.exponent() ? 1 : 0);
    }
    default:
      break;
  }
  if (is_unary(a.op())) return compare(a.arg(), b.arg());
  int c = compare(a.lhs(), b.lhs());
  if (c != 0) return c;
  return compare(a.rhs(), b.rhs());
}

bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

// ---------------------------------------------------------------------------
// Simplifying builders

Expr operator-(const Expr& a) {
  if (a.is_const()) return Expr::constant(-a.value());
  if (a.op() == Op::Neg) return a.arg();
  return Expr::unary(Op::Neg, a);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() + b.value());
  return Expr::binary(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() - b.value());
  return Expr::binary(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() * b.value());
  if (b.is_const()) return b * a;
  if (a.is_const()) {
    if (a.value() == -1) return -b;
    if (b.op() == Op::Mul && b.lhs().is_const()) return Expr::constant(a.value() * b.lhs().value()) * b.rhs();
    if (b.op() == Op::Neg) return Expr::constant(-a.value()) * b.arg();
  }
  return Expr::binary(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_one()) return a;
  if (b.is_const() && sgn(b.value()) != 0) {
    Rational inv = 1 / b.value();
    return Expr::constant(inv) * a;
  }
  if (a.is_zero() && !b.is_zero()) return Expr();
  return Expr::binary(Op::Div, a, b);
}

namespace {

bool rational_pow(const Rational& base, long n, Rational& out) {
  if (sgn(base) == 0 && n < 0) return false;
  Rational r = 1;
  Rational b = base;
  unsigned long e = n < 0 ? static_cast<unsigned long>(-n) : static_cast<unsigned long>(n);
  while (e != 0) {
    if (e & 1UL) r *= b;
    b *= b;
    e >>= 1;
  }
  if (n < 0) r = 1 / r;
  out = r;
  return true;
}

}  // namespace

Expr pow(const Expr& base, long exponent) {
  if (exponent == 0) return Expr::constant(1);
  if (exponent == 1) return base;
  if (base.is_const()) {
    Rational r;
    if (rational_pow(base.value(), exponent, r)) return Expr::constant(r);
  }
  return Expr::power(base, exponent);
}

Expr sin(const Expr& a) { return a.is_zero() ? Expr() : Expr::unary(Op::Sin, a); }
Expr cos(const Expr& a) { return a.is_zero() ? Expr::constant(1) : Expr::unary(Op::Cos, a); }
Expr exp(const Expr& a) { return a.is_zero() ? Expr::constant(1) : Expr::unary(Op::Exp, a); }
Expr log(const Expr& a) { return a.is_one() ? Expr() : Expr::unary(Op::Log, a); }
Expr sqrt(const Expr& a) {
  if (a.is_zero() || a.is_one()) return a;
  return Expr::unary(Op::Sqrt, a);
}

// ---------------------------------------------------------------------------
// Canonical form

Expr canonical(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
    case Op::Named:
    case Op::Var:
      return e;
    case Op::Pow: {
      Expr base = canonical(e.arg());
      if (base.is_const()) {
        Rational r;
        if (rational_pow(base.value(), e.exponent(), r)) return Expr::constant(r);
      }
      return Expr::power(base, e.exponent());
    }
    default:
      break;
  }
  if (is_unary(e.op())) {
    Expr a = canonical(e.arg());
    if (e.op() == Op::Neg && a.is_const()) return Expr::constant(-a.value());
    return Expr::unary(e.op(), a);
  }
  Expr a = canonical(e.lhs());
  Expr b = canonical(e.rhs());
  if (a.is_const() && b.is_const()) {
    switch (e.op()) {
      case Op::Add: return Expr::constant(a.value() + b.value());
      case Op::Sub: return Expr::constant(a.value() - b.value());
      case Op::Mul: return Expr::constant(a.value() * b.value());
      case Op::Div:
        if (sgn(b.value()) != 0) return Expr::constant(a.value() / b.value());
        break;
      default: break;
    }
  }
  if ((e.op() == Op::Add || e.op() == Op::Mul) && compare(b, a) < 0) std::swap(a, b);
  return Expr::binary(e.op(), a, b);
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expr diff_raw(const Expr& e, std::size_t v) {
  if (e.var_bound() <= v) return Expr();
  switch (e.op()) {
    case Op::Const:
    case Op::Named:
      return Expr();
    case Op::Var:
      return e.var() == v ? Expr::constant(1) : Expr();
    case Op::Neg:
      return -diff_raw(e.arg(), v);
    case Op::Add:
      return diff_raw(e.lhs(), v) + diff_raw(e.rhs(), v);
    case Op::Sub:
      return diff_raw(e.lhs(), v) - diff_raw(e.rhs(), v);
    case Op::Mul:
      return diff_raw(e.lhs(), v) * e.rhs() + e.lhs() * diff_raw(e.rhs(), v);
    case Op::Div: {
      Expr da = diff_raw(e.lhs(), v);
      if (e.rhs().is_constant_valued()) return da / e.rhs();
      Expr db = diff_raw(e.rhs(), v);
      if (db.is_zero()) return da / e.rhs();
      return (da * e.rhs() - e.lhs() * db) / pow(e.rhs(), 2);
    }
    case Op::Pow: {
      Expr da = diff_raw(e.arg(), v);
      if (da.is_zero()) return Expr();
      return Expr::constant(e.exponent()) * pow(e.arg(), e.exponent() - 1) * da;
    }
    case Op::Sin:
      return cos(e.arg()) * diff_raw(e.arg(), v);
    case Op::Cos:
      return -sin(e.arg()) * diff_raw(e.arg(), v);
    case Op::Exp:
      return e * diff_raw(e.arg(), v);
    case Op::Log:
      return diff_raw(e.arg(), v) / e.arg();
    case Op::Sqrt:
      return diff_raw(e.arg(), v) / (Expr::constant(2) * e);
  }
  return Expr();
}

}  // namespace

Expr diff(const Expr& e, std::size_t var) { return canonical(diff_raw(e, var)); }

Expr diff(const Expr& e, std::string_view var, std::span<const std::string> coords) {
  for (std::size_t i = 0; i < coords.size(); ++i)
    if (coords[i] == var) return diff(e, i);
  throw Error(ErrorKind::UnknownIdentifier, "no coordinate named '" + std::string(var) + "'");
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void domain_error(const Expr& e, const char* what) {
  throw Error(ErrorKind::Domain, std::string(what) + " in " + print(e));
}

double ipow(double b, long n) {
  double r = 1.0;
  unsigned long k = n < 0 ? static_cast<unsigned long>(-n) : static_cast<unsigned long>(n);
  while (k != 0) {
    if (k & 1UL) r *= b;
    b *= b;
    k >>= 1;
  }
  return n < 0 ? 1.0 / r : r;
}

double eval_rec(const Expr& e, std::span<const double> x) {
  switch (e.op()) {
    case Op::Const: return e.value().get_d();
    case Op::Named:
      if (e.imaginary()) domain_error(e, "imaginary constant");
      return e.named_value();
    case Op::Var:
      if (e.var() >= x.size()) throw Error(ErrorKind::InvalidArgument, "point dimension too small");
      return x[e.var()];
    case Op::Neg: return -eval_rec(e.arg(), x);
    case Op::Sin: return std::sin(eval_rec(e.arg(), x));
    case Op::Cos: return std::cos(eval_rec(e.arg(), x));
    case Op::Exp: return std::exp(eval_rec(e.arg(), x));
    case Op::Log: {
      double a = eval_rec(e.arg(), x);
      if (!(a > 0.0)) domain_error(e, "log of non-positive value");
      return std::log(a);
    }
    case Op::Sqrt: {
      double a = eval_rec(e.arg(), x);
      if (a < 0.0 || std::isnan(a)) domain_error(e, "sqrt of negative value");
      return std::sqrt(a);
    }
    case Op::Add: return eval_rec(e.lhs(), x) + eval_rec(e.rhs(), x);
    case Op::Sub: return eval_rec(e.lhs(), x) - eval_rec(e.rhs(), x);
    case Op::Mul: return eval_rec(e.lhs(), x) * eval_rec(e.rhs(), x);
    case Op::Div: {
      double a = eval_rec(e.lhs(), x);
      double b = eval_rec(e.rhs(), x);
      if (b == 0.0) domain_error(e, "division by zero");
      return a / b;
    }
    case Op::Pow: {
      double b = eval_rec(e.arg(), x);
      if (b == 0.0 && e.exponent() < 0) domain_error(e, "division by zero");
      return ipow(b, e.exponent());
    }
  }
  return 0.0;
}

}  // namespace

double eval(const Expr& e, std::span<const double> point) { return eval_rec(e, point); }

}  // namespace liouville
