#include <cmath>
#include <random>

#include "doctest.h"
#include "liouville/geometry.hpp"
#include "random_expr.hpp"

using namespace liouville;

namespace {

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> pts(n, std::vector<double>(m));
  for (auto& p : pts)
    for (double& v : p) v = u(rng);
  return pts;
}

Structure2Form form(std::size_t m, std::initializer_list<std::tuple<std::size_t, std::size_t, long>> e) {
  Structure2Form w(m);
  for (auto [a, b, v] : e) w.set(a, b, Expr::constant(v));
  return w;
}

// Jacobiator evaluated numerically from finite differences of the numeric
// bivector; shares nothing with the symbolic path.
double jacobi_fd(const PoissonBivector& pi, const std::vector<double>& x) {
  const std::size_t m = pi.dim();
  const double h = 1e-5;
  auto P = pi.at(x);
  std::vector<std::vector<double>> dP(m);
  for (std::size_t d = 0; d < m; ++d) {
    auto xp = x, xm = x;
    xp[d] += h;
    xm[d] -= h;
    auto a = pi.at(xp), b = pi.at(xm);
    dP[d].resize(m * m);
    for (std::size_t k = 0; k < m * m; ++k) dP[d][k] = (a[k] - b[k]) / (2 * h);
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t c = 0; c < m; ++c) {
        double s = 0.0;
        for (std::size_t d = 0; d < m; ++d)
          s += P[d * m + a] * dP[d][b * m + c] + P[d * m + b] * dP[d][c * m + a] + P[d * m + c] * dP[d][a * m + b];
        worst = std::max(worst, std::fabs(s));
      }
  return worst;
}

}  // namespace

TEST_CASE("hamiltonian_vf_2form: planar rotation") {
  std::vector<std::string> c{"x", "y"};
  auto r = hamiltonian_vf_2form(form(2, {{0, 1, 1}}), parse_expr("(x^2+y^2)/2", c));
  REQUIRE(r.symbolic);
  CHECK(r.kernel_dim == 0);
  CHECK(print(r.field[0]) == "-y");
  CHECK(print(r.field[1]) == "x");
}

TEST_CASE("hamiltonian_vf_2form: degenerate extension to R^3") {
  std::vector<std::string> c{"x", "y", "z"};
  auto w = form(3, {{0, 1, 1}});
  auto r = hamiltonian_vf_2form(w, parse_expr("(x^2+y^2)/2", c));
  CHECK(r.kernel_dim == 1);
  CHECK(print(r.field[0]) == "-y");
  CHECK(print(r.field[1]) == "x");
  CHECK(r.field[2].is_zero());
  CHECK_THROWS_AS(hamiltonian_vf_2form(w, parse_expr("z", c)), Error);
  try {
    hamiltonian_vf_2form(w, parse_expr("z", c));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InconsistentSystem);
  }
}

TEST_CASE("hamiltonian_vf_2form: numeric pointwise solve with variable coefficients") {
  std::vector<std::string> c{"x", "y"};
  Structure2Form w(2);
  w.set(0, 1, parse_expr("1 + x^2", c));
  Expr h = parse_expr("(x^2+y^2)/2", c);
  std::vector<double> x{0.5, -0.25};
  auto v = solve_hamiltonian_at(w, h, x);
  // X^y (1+x^2) = x, -X^x (1+x^2) = y
  CHECK(v[0] == doctest::Approx(0.25 / 1.25));
  CHECK(v[1] == doctest::Approx(0.5 / 1.25));
  auto r = hamiltonian_vf_2form(w, h);  // closed in 2D, so preserving
  CHECK_FALSE(r.symbolic);
}

TEST_CASE("hamiltonian_vf_2form: non-closed form is flagged when X does not preserve it") {
  std::vector<std::string> c{"x", "y", "z", "w"};
  Structure2Form w(4);
  w.set(0, 1, Expr::constant(1));
  w.set(2, 3, parse_expr("1 + x^2", c));
  w.set(0, 2, parse_expr("y", c));
  try {
    hamiltonian_vf_2form(w, parse_expr("x + z", c));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotStructurePreserving);
  }
}

TEST_CASE("hamiltonian_vf_poisson examples") {
  std::vector<std::string> c{"x", "y"};
  PoissonBivector pi(2);
  pi.set(0, 1, Expr::constant(1));
  auto x = hamiltonian_vf_poisson(pi, parse_expr("(x^2+y^2)/2", c));
  CHECK(print(x[0]) == "-y");
  CHECK(print(x[1]) == "x");
  PoissonBivector py(2);
  py.set(0, 1, parse_expr("y", c));
  auto z = hamiltonian_vf_poisson(py, parse_expr("y^2/2", c));
  CHECK(eval(z[0], std::vector<double>{0.3, 2.0}) == doctest::Approx(-4.0));
  CHECK(z[1].is_zero());
  auto zero = hamiltonian_vf_poisson(PoissonBivector(2), parse_expr("x*y", c));
  CHECK(zero[0].is_zero());
  CHECK(zero[1].is_zero());
}

TEST_CASE("bracket examples") {
  std::vector<std::string> c{"x", "y"};
  PoissonBivector pi(2);
  pi.set(0, 1, Expr::constant(1));
  CHECK(print(bracket(parse_expr("x", c), parse_expr("y", c), pi)) == "1");
  Expr h = parse_expr("x^3*y + sin(y)", c);
  CHECK(eval(bracket(h, h, pi), std::vector<double>{0.4, 0.7}) == doctest::Approx(0.0));
  auto w = form(2, {{0, 1, 1}});
  CHECK(print(bracket(parse_expr("x", c), parse_expr("y", c), w)) == "1");
  std::vector<std::string> c4{"x1", "x2", "y1", "y2"};
  PoissonBivector p4(4);
  p4.set(0, 2, Expr::constant(1));
  p4.set(1, 3, Expr::constant(1));
  CHECK(bracket(parse_expr("x1*y1", c4), parse_expr("x2*y2", c4), p4).is_zero());
}

TEST_CASE("lie_derivative examples") {
  std::vector<std::string> c{"x", "y"};
  VectorFieldExpr rot({parse_expr("-y", c), parse_expr("x", c)});
  auto l = lie_derivative(rot, form(2, {{0, 1, 1}}).as_tensor());
  for (std::size_t f = 0; f < l.size(); ++f) CHECK(l[f].is_zero());
  std::vector<std::string> c1{"x"};
  VectorFieldExpr xdx({parse_expr("x", c1)});
  auto dx = TensorField::covector({Expr::constant(1)});
  auto px = TensorField::vector(VectorFieldExpr({Expr::constant(1)}));
  CHECK(print(lie_derivative(xdx, px)[0]) == "(-1)");
  CHECK(print(lie_derivative(xdx, dx)[0]) == "1");
}

TEST_CASE("check_jacobi") {
  std::vector<std::string> c{"x", "y", "z"};
  auto pts = random_points(100, 3, 11);
  PoissonBivector p0(3);
  p0.set(0, 1, Expr::constant(1));
  CHECK(check_jacobi(p0, pts) == 0.0);
  std::vector<std::string> c2{"x", "y"};
  PoissonBivector p2(2);
  p2.set(0, 1, parse_expr("y", c2));
  CHECK(check_jacobi(p2, random_points(100, 2, 12)) == 0.0);
  PoissonBivector p3(3);
  p3.set(0, 1, parse_expr("z", c));
  p3.set(1, 2, parse_expr("x", c));
  double r = check_jacobi(p3, pts);
  double oracle = 0.0;
  for (const auto& x : pts) oracle = std::max(oracle, jacobi_fd(p3, x));
  CHECK(r <= 1e-10);
  CHECK(oracle <= 1e-8);
  // a genuinely non-Poisson bivector: Pi^{12} = z, Pi^{23} = y, Pi^{13} = x
  PoissonBivector bad(3);
  bad.set(0, 1, parse_expr("z", c));
  bad.set(1, 2, parse_expr("y", c));
  bad.set(0, 2, parse_expr("x", c));
  double rb = check_jacobi(bad, pts);
  double ob = 0.0;
  for (const auto& x : pts) ob = std::max(ob, jacobi_fd(bad, x));
  CHECK(rb > 1e-3);
  CHECK(rb == doctest::Approx(ob).epsilon(1e-6));
}

TEST_CASE("property: Hamiltonian fields of closed forms preserve the form") {
  const std::vector<std::string> c{"a", "b", "u", "v"};
  testsupport::ExprGen gen(42, c);
  auto pts = random_points(100, 4, 13);
  auto w = form(4, {{0, 1, 2}, {0, 2, 1}, {2, 3, -3}, {1, 3, 1}});
  for (int n = 0; n < 20; ++n) {
    Expr h = canonical(gen(4));
    auto r = hamiltonian_vf_2form(w, h);
    REQUIRE(r.symbolic);
    CHECK(max_abs_at(lie_derivative(r.field, w.as_tensor()), pts) <= 1e-9);
  }
}

TEST_CASE("property: bracket antisymmetry and X_H(G) = {H,G}") {
  const std::vector<std::string> c{"x", "y", "z"};
  testsupport::ExprGen gen(8, c);
  PoissonBivector pi(3);
  pi.set(0, 1, parse_expr("z", c));
  pi.set(1, 2, parse_expr("x", c));
  pi.set(0, 2, parse_expr("y^2", c));
  auto pts = random_points(20, 3, 14);
  for (int n = 0; n < 30; ++n) {
    Expr a = canonical(gen(4)), b = canonical(gen(4));
    Expr s = canonical(bracket(a, b, pi) + bracket(b, a, pi));
    Compiled k(std::vector<Expr>{s}, 3);
    for (const auto& x : pts) CHECK(std::fabs(k.eval(x)[0]) <= 1e-12 * std::max(1.0, std::fabs(eval(bracket(a, b, pi), x))));
    CHECK(canonical(hamiltonian_vf_poisson(pi, a).apply(b)) == canonical(bracket(a, b, pi)));
  }
}
