#include <cmath>
#include <numbers>

#include "doctest.h"
#include "liouville/compile.hpp"
#include "liouville/expr.hpp"
#include "random_expr.hpp"

using namespace liouville;

namespace {

const std::vector<std::string> kXY{"x", "y"};
const std::vector<std::string> kQP{"q", "p"};
const std::vector<std::string> kXYZ{"x", "y", "z"};

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("parse: quadratic form keeps the division structure") {
  Expr e = parse_expr("(x^2+y^2)/2", kXY);
  CHECK(e.op() == Op::Div);
  CHECK(e.lhs().op() == Op::Add);
  CHECK(e.rhs().value() == 2);
  CHECK(print(e) == "(x^2+y^2)/2");
  CHECK(eval(e, std::vector<double>{1.0, 2.0}) == 2.5);
}

TEST_CASE("parse: pendulum Hamiltonian") {
  Expr e = parse_expr("p^2/2 - cos(q)", kQP);
  CHECK(e.op() == Op::Sub);
  CHECK(eval(e, std::vector<double>{0.0, 0.0}) == -1.0);
}

TEST_CASE("parse: error kinds and offsets") {
  CHECK(kind_of([] { parse_expr("x^(1/2)", kXY); }) == ErrorKind::NonIntegerExponent);
  CHECK(kind_of([] { parse_expr("x^y", kXY); }) == ErrorKind::NonIntegerExponent);
  CHECK(kind_of([] { parse_expr("x + w", kXY); }) == ErrorKind::UnknownIdentifier);
  CHECK(kind_of([] { parse_expr("", kXY); }) == ErrorKind::Syntax);
  CHECK(kind_of([] { parse_expr("x y", kXY); }) == ErrorKind::Syntax);
  CHECK(kind_of([] { parse_expr("x", {}); }) == ErrorKind::InvalidArgument);
  std::vector<std::string> dup{"x", "x"};
  CHECK(kind_of([&] { parse_expr("x", dup); }) == ErrorKind::InvalidArgument);
  try {
    parse_expr("x + * y", kXY);
    FAIL("expected error");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("parse: signed and parenthesized exponents") {
  Expr e = parse_expr("x^(-2) + x^(3)", kXY);
  CHECK(eval(e, std::vector<double>{2.0, 0.0}) == doctest::Approx(8.25));
  CHECK(print(parse_expr("x^-1", kXY)) == "x^(-1)");
}

TEST_CASE("parse: named constants and pi") {
  IrrationalBasis basis;
  basis.add("s2", "1.41421356237309504880168872420969807857");
  std::vector<std::string> c{"x"};
  Expr e = parse_expr("s2*x + pi", c, basis);
  CHECK(eval(e, std::vector<double>{1.0}) == doctest::Approx(std::numbers::sqrt2 + std::numbers::pi));
  CHECK(kind_of([&] { basis.add("s2", "1.41421356237309504880168872420969807857"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { basis.add("short", "1.414"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { basis.add("zero", "0.000000000000000000000000000000000"); }) == ErrorKind::Config);
}

TEST_CASE("diff: examples") {
  CHECK(print(diff(parse_expr("(x^2+y^2)/2", kXY), "x", kXY)) == "x");
  CHECK(print(diff(parse_expr("p^2/2 - cos(q)", kQP), "q", kQP)) == "sin(q)");
  CHECK(diff(parse_expr("x", kXY), "y", kXY).is_zero());
  CHECK(kind_of([] { diff(parse_expr("x", kXY), "w", kXY); }) == ErrorKind::UnknownIdentifier);
}

TEST_CASE("eval: domain errors name the subtree") {
  std::vector<std::string> c{"x"};
  Expr e = parse_expr("1/x", c);
  try {
    eval(e, std::vector<double>{0.0});
    FAIL("expected error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::Domain);
    CHECK(std::string(err.what()).find("1/x") != std::string::npos);
  }
  CHECK(kind_of([&] { eval(parse_expr("log(x)", c), std::vector<double>{-1.0}); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { eval(parse_expr("sqrt(x)", c), std::vector<double>{-1.0}); }) == ErrorKind::Domain);
  Compiled k(std::vector<Expr>{e}, 1);
  CHECK(kind_of([&] { k.eval(std::vector<double>{0.0}); }) == ErrorKind::Domain);
}

TEST_CASE("property: derivative matches central differences") {
  testsupport::ExprGen gen(20240611, kXYZ);
  int checked = 0;
  for (int n = 0; n < 1000; ++n) {
    Expr e = gen(6);
    std::vector<double> x = gen.point(3);
    std::size_t v = static_cast<std::size_t>(n % 3);
    double d = eval(diff(e, v), x);
    const double h = 1e-6;
    std::vector<double> xp = x, xm = x;
    xp[v] += h;
    xm[v] -= h;
    double fd = (eval(e, xp) - eval(e, xm)) / (2 * h);
    double scale = std::max({1.0, std::fabs(d), std::fabs(eval(e, x))});
    INFO(print(e));
    CHECK(std::fabs(d - fd) <= 1e-5 * scale);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("property: print/parse round trip reproduces the canonical tree") {
  testsupport::ExprGen gen(77, kXYZ);
  for (int n = 0; n < 1000; ++n) {
    Expr e = gen(6);
    std::string s = print(e);
    INFO(s);
    CHECK(parse_expr(s, kXYZ) == canonical(e));
    Expr c = canonical(e);
    CHECK(parse_expr(print(c), kXYZ) == c);
  }
}

TEST_CASE("compiled tape agrees with tree evaluation") {
  testsupport::ExprGen gen(5, kXYZ);
  std::vector<Expr> es;
  for (int n = 0; n < 50; ++n) es.push_back(gen(5));
  Compiled k(es, 3);
  for (int n = 0; n < 20; ++n) {
    std::vector<double> x = gen.point(3);
    std::vector<double> out = k.eval(x);
    for (std::size_t i = 0; i < es.size(); ++i) CHECK(out[i] == doctest::Approx(eval(es[i], x)).epsilon(1e-13));
  }
}
