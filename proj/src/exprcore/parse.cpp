#include <cctype>
#include <cmath>
#include <cstdlib>

#include "liouville/expr.hpp"

namespace liouville {

// ---------------------------------------------------------------------------
// Named constants

void IrrationalBasis::add(std::string name, std::string decimal, bool imaginary) {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
    throw Error(ErrorKind::Config, "invalid constant name '" + name + "'");
  if (find(name) != nullptr || name == "pi")
    throw Error(ErrorKind::Config, "constant '" + name + "' declared twice");
  std::size_t digits = 0;
  for (char c : decimal) {
    if (c == 'e' || c == 'E') break;
    if (std::isdigit(static_cast<unsigned char>(c))) ++digits;
  }
  if (digits < 30)
    throw Error(ErrorKind::Config,
                "constant '" + name + "' needs at least 30 significant digits, got " + std::to_string(digits));
  char* end = nullptr;
  double v = std::strtod(decimal.c_str(), &end);
  if (end == decimal.c_str() || *end != '\0')
    throw Error(ErrorKind::Config, "constant '" + name + "' has a malformed value");
  if (!std::isfinite(v) || v == 0.0)
    throw Error(ErrorKind::Config, "constant '" + name + "' must be finite and nonzero");
  constants_.push_back(NamedConstant{std::move(name), std::move(decimal), v, imaginary});
}

const NamedConstant* IrrationalBasis::find(std::string_view name) const {
  for (const auto& c : constants_)
    if (c.name == name) return &c;
  return nullptr;
}

const NamedConstant& builtin_pi() {
  static const NamedConstant pi{"pi", "3.14159265358979323846264338327950288", 3.14159265358979323846, false};
  return pi;
}

Rational parse_decimal(std::string_view lit) {
  std::size_t i = 0;
  std::string mantissa;
  long scale = 0;
  bool seen_point = false;
  for (; i < lit.size(); ++i) {
    char c = lit[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa.push_back(c);
      if (seen_point) ++scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (mantissa.empty()) throw Error(ErrorKind::Syntax, "malformed number '" + std::string(lit) + "'");
  long exp10 = 0;
  if (i < lit.size() && (lit[i] == 'e' || lit[i] == 'E')) {
    ++i;
    bool neg = false;
    if (i < lit.size() && (lit[i] == '+' || lit[i] == '-')) neg = lit[i++] == '-';
    if (i == lit.size()) throw Error(ErrorKind::Syntax, "malformed exponent in '" + std::string(lit) + "'");
    for (; i < lit.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(lit[i])))
        throw Error(ErrorKind::Syntax, "malformed number '" + std::string(lit) + "'");
      exp10 = exp10 * 10 + (lit[i] - '0');
      if (exp10 > 4000) throw Error(ErrorKind::Syntax, "exponent out of range");
    }
    if (neg) exp10 = -exp10;
  }
  if (i != lit.size()) throw Error(ErrorKind::Syntax, "malformed number '" + std::string(lit) + "'");
  mpz_class num(mantissa, 10);
  long shift = exp10 - scale;
  mpz_class ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  Rational q = shift >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
  q.canonicalize();
  return q;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view src, std::span<const std::string> coords, const IrrationalBasis& basis)
      : src_(src), coords_(coords), basis_(basis) {}

  Expr run() {
    skip();
    if (pos_ == src_.size()) throw SyntaxError(ErrorKind::Syntax, pos_, "empty expression");
    Expr e = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(ErrorKind::Syntax, pos_, what); }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+'))
        e = Expr::binary(Op::Add, e, term());
      else if (accept('-'))
        e = Expr::binary(Op::Sub, e, term());
      else
        return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*'))
        e = Expr::binary(Op::Mul, e, unary());
      else if (accept('/'))
        e = Expr::binary(Op::Div, e, unary());
      else
        return e;
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::unary(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (!accept('^')) return base;
    long n = exponent();
    skip();
    if (pos_ < src_.size() && src_[pos_] == '^') fail("chained exponent");
    return Expr::power(base, n);
  }

  // Integer literal exponent, optionally signed and optionally parenthesized.
  long exponent() {
    skip();
    std::size_t start = pos_;
    bool paren = accept('(');
    bool neg = false;
    if (accept('-'))
      neg = true;
    else
      accept('+');
    skip();
    std::size_t digits_at = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    bool integral = pos_ > digits_at;
    if (integral && pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
      integral = false;
    if (integral && paren) {
      skip();
      if (pos_ >= src_.size() || src_[pos_] != ')') integral = false;
    }
    if (!integral) throw SyntaxError(ErrorKind::NonIntegerExponent, start, "exponent must be an integer literal");
    std::string_view digits = src_.substr(digits_at, pos_ - digits_at);
    if (digits.size() > 9) throw SyntaxError(ErrorKind::Syntax, digits_at, "exponent too large");
    long n = std::strtol(std::string(digits).c_str(), nullptr, 10);
    if (paren) expect(')');
    return neg ? -n : n;
  }

  Expr atom() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    try {
      return Expr::constant(parse_decimal(src_.substr(start, pos_ - start)));
    } catch (const Error&) {
      throw SyntaxError(ErrorKind::Syntax, start, "malformed number");
    }
  }

  Expr identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string_view id = src_.substr(start, pos_ - start);
    static constexpr std::pair<std::string_view, Op> funcs[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}};
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i] == id) return Expr::variable(i, coords_[i]);
    for (auto [fname, op] : funcs) {
      if (fname == id) {
        expect('(');
        Expr a = expr();
        expect(')');
        return Expr::unary(op, a);
      }
    }
    if (const NamedConstant* c = basis_.find(id)) return Expr::named(*c);
    if (id == "pi") return Expr::named(builtin_pi());
    throw SyntaxError(ErrorKind::UnknownIdentifier, start, "unknown identifier '" + std::string(id) + "'");
  }

  std::string_view src_;
  std::span<const std::string> coords_;
  const IrrationalBasis& basis_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view source, std::span<const std::string> coords, const IrrationalBasis& basis) {
  if (coords.empty()) throw Error(ErrorKind::InvalidArgument, "no coordinates declared");
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j)
      if (coords[i] == coords[j]) throw Error(ErrorKind::InvalidArgument, "duplicate coordinate '" + coords[i] + "'");
  return canonical(Parser(source, coords, basis).run());
}

// ---------------------------------------------------------------------------
// Printer

namespace {

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

void print_to(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out.push_back('(');
  print_to(e, out);
  if (wrap) out.push_back(')');
}

void print_to(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Const: out += print_rational(e.value()); return;
    case Op::Named:
    case Op::Var: out += e.name(); return;
    case Op::Neg:
      out.push_back('-');
      print_wrapped(e.arg(), precedence(e.arg()) < 4 || e.arg().is_const(), out);
      return;
    case Op::Sin: out += "sin("; break;
    case Op::Cos: out += "cos("; break;
    case Op::Exp: out += "exp("; break;
    case Op::Log: out += "log("; break;
    case Op::Sqrt: out += "sqrt("; break;
    case Op::Pow: {
      print_wrapped(e.arg(), precedence(e.arg()) < 5, out);
      out.push_back('^');
      if (e.exponent() < 0)
        out += "(" + std::to_string(e.exponent()) + ")";
      else
        out += std::to_string(e.exponent());
      return;
    }
    default: {
      int p = precedence(e);
      print_wrapped(e.lhs(), precedence(e.lhs()) < p, out);
      static constexpr const char* sym[] = {"+", "-", "*", "/"};
      out += sym[static_cast<int>(e.op()) - static_cast<int>(Op::Add)];
      print_wrapped(e.rhs(), precedence(e.rhs()) <= p, out);
      return;
    }
  }
  print_to(e.arg(), out);
  out.push_back(')');
}

}  // namespace

std::string print_rational(const Rational& q) {
  if (q.get_den() == 1 && sgn(q) >= 0) return q.get_num().get_str();
  return "(" + q.get_str() + ")";
}

std::string print(const Expr& e) {
  std::string out;
  print_to(e, out);
  return out;
}

}  // namespace liouville
