#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "liouville/error.hpp"

namespace liouville {

using Rational = mpq_class;

/// A named real (or purely imaginary) constant with a high-precision decimal
/// expansion. Expressions keep these symbolic; numeric evaluation substitutes
/// the double nearest to the declared expansion.
struct NamedConstant {
  std::string name;
  std::string decimal;  // at least 30 significant digits
  double value = 0.0;
  bool imaginary = false;  // the constant is value * i
};

/// The irrational constants a configuration declares, pairwise Q-linearly
/// independent together with 1 (declared, not verified).
class IrrationalBasis {
 public:
  IrrationalBasis() = default;

  /// Throws Error(Config) on duplicate names, short expansions, zero or
  /// non-finite values.
  void add(std::string name, std::string decimal, bool imaginary = false);

  const NamedConstant* find(std::string_view name) const;
  std::size_t size() const { return constants_.size(); }
  const NamedConstant& operator[](std::size_t i) const { return constants_[i]; }
  auto begin() const { return constants_.begin(); }
  auto end() const { return constants_.end(); }

 private:
  std::vector<NamedConstant> constants_;
};

/// `pi` is always available to the parser, even without a declaration.
const NamedConstant& builtin_pi();

enum class Op : unsigned char {
  Const,
  Named,
  Var,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

bool is_unary(Op op);
bool is_binary(Op op);

/// Immutable expression tree. Copies share structure, so Expr values are
/// cheap to pass around and safe to share between threads.
class Expr {
 public:
  Expr();  // the constant 0

  static Expr constant(Rational value);
  static Expr constant(long value) { return constant(Rational(value)); }
  static Expr named(const NamedConstant& c);
  static Expr variable(std::size_t index, std::string name);

  /// Raw node constructors: no simplification at all.
  static Expr unary(Op op, Expr arg);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr power(Expr base, long exponent);

  Op op() const;
  const Rational& value() const;       // Const
  const std::string& name() const;     // Named, Var
  double named_value() const;          // Named
  bool imaginary() const;              // Named
  const std::string& decimal() const;  // Named
  std::size_t var() const;             // Var
  long exponent() const;               // Pow
  const Expr& arg() const;             // unary ops and Pow base
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool is_const() const { return op() == Op::Const; }
  bool is_zero() const;
  bool is_one() const;
  /// True when the tree mentions no coordinate.
  bool is_constant_valued() const;
  /// Largest variable index + 1, or 0 when constant-valued.
  std::size_t var_bound() const;

  struct Node;
  const Node* node() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Total order on trees; used for canonical child ordering.
int compare(const Expr& a, const Expr& b);
bool operator==(const Expr& a, const Expr& b);
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }
struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// Simplifying builders: constant folding and 0/1 identities only.
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, long exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);

/// Folds every all-rational subtree and orders the children of + and *.
Expr canonical(const Expr& e);

/// Parses infix source; identifiers resolve to coordinates first, then to
/// declared constants, then to `pi`. The result is canonical.
Expr parse_expr(std::string_view source, std::span<const std::string> coords,
                const IrrationalBasis& basis = {});

/// Canonical printer; parse(print(e)) == canonical(e).
std::string print(const Expr& e);
std::string print_rational(const Rational& q);

Expr diff(const Expr& e, std::size_t var);
Expr diff(const Expr& e, std::string_view var, std::span<const std::string> coords);

/// Tree-walking evaluation; throws Error(Domain) naming the offending
/// subtree. Use Tape (compile.hpp) on hot paths.
double eval(const Expr& e, std::span<const double> point);

/// Parses a decimal literal ("12", "0.25", "1e-3", "2.5E+2") exactly.
Rational parse_decimal(std::string_view literal);

}  // namespace liouville
