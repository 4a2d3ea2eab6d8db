#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "liouville/torusflow.hpp"
#include "oracles.hpp"
#include "systems.hpp"

using namespace liouville;
using testsupport::pendulum_period;

namespace {

constexpr double kPi = std::numbers::pi;

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("oracle self-check: quadrature against elliptic integrals") {
  for (double e : {-0.8, -0.5, -0.2}) {
    CHECK(pendulum_period(e) == doctest::Approx(testsupport::pendulum_period_elliptic(e)).epsilon(1e-10));
    CHECK(testsupport::pendulum_area(e) == doctest::Approx(testsupport::pendulum_area_elliptic(e)).epsilon(1e-10));
  }
}

TEST_CASE("integrate_flow: rotation") {
  std::vector<std::string> c{"x", "y"};
  VectorFieldExpr rot({parse_expr("-y", c), parse_expr("x", c)});
  auto full = integrate_flow(rot, std::vector<double>{1.0, 0.0}, 2 * kPi);
  CHECK(dist(full, {1.0, 0.0}) <= 1e-9);
  auto quarter = integrate_flow(rot, std::vector<double>{1.0, 0.0}, kPi / 2);
  CHECK(dist(quarter, {0.0, 1.0}) <= 1e-9);
  auto back = integrate_flow(rot, std::vector<double>{1.0, 0.0}, -kPi / 2);
  CHECK(dist(back, {0.0, -1.0}) <= 1e-9);
}

TEST_CASE("integrate_flow: pendulum returns after the oracle period") {
  auto s = testsupport::pendulum();
  auto x0 = testsupport::pendulum_seed(-0.5);
  CHECK(x0[1] == doctest::Approx(1.0));
  auto x = integrate_flow(s.fields[0], x0, pendulum_period(-0.5));
  CHECK(dist(x, x0) <= 1e-7);
}

TEST_CASE("integrate_flow: failures") {
  std::vector<std::string> c{"x"};
  VectorFieldExpr blow({parse_expr("x^2", c)});
  try {
    integrate_flow(blow, std::vector<double>{1.0}, 2.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::DomainExit || e.kind() == ErrorKind::StepFailure));
  }
  VectorFieldExpr lg({parse_expr("-1/x", c)});
  try {
    integrate_flow(lg, std::vector<double>{1.0}, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::DomainExit || e.kind() == ErrorKind::StepFailure));
  }
}

TEST_CASE("find_period_lattice: single oscillator and pendulum") {
  auto osc = testsupport::oscillator();
  auto l = find_period_lattice(osc, std::vector<double>{1.0, 0.0});
  REQUIRE(l.rows() == 1);
  CHECK(l(0, 0) == doctest::Approx(2 * kPi).epsilon(1e-9));
  auto pen = testsupport::pendulum();
  auto lp = find_period_lattice(pen, testsupport::pendulum_seed(-0.5));
  CHECK(std::fabs(lp(0, 0) - pendulum_period(-0.5)) <= 1e-6);
}

TEST_CASE("find_period_lattice: oscillator pair") {
  auto s = testsupport::oscillator_pair();
  std::vector<double> x0{1.0, 0.0, 0.8, 0.0};
  auto l = find_period_lattice(s, x0);
  Eigen::MatrixXd expect(2, 2);
  expect << 2 * kPi, 0, 0, 2 * kPi / std::sqrt(2.0);
  auto u = unimodular_between(expect, l, 1e-6);
  REQUIRE(u.has_value());
  CHECK((l - u->cast<double>() * expect).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("find_period_lattice: non-separable fields need the generic search") {
  // X_1 = X_{H1+H2} is quasi-periodic on its own; the lattice has no vector
  // along the first axis.
  auto s = testsupport::oscillator_pair();
  s.fields[0] = s.fields[0] + s.fields[1];
  std::vector<double> x0{1.0, 0.0, 0.8, 0.0};
  auto l = find_period_lattice(s, x0);
  Eigen::MatrixXd expect(2, 2);
  expect << 2 * kPi, -2 * kPi, 0, 2 * kPi / std::sqrt(2.0);
  CHECK(unimodular_between(expect, l, 1e-6).has_value());
}

TEST_CASE("build_chart: frequencies and seed angles") {
  auto s = testsupport::oscillator_pair();
  std::vector<double> x0{1.0, 0.0, 0.8, 0.0};
  auto chart = build_chart(s, x0);
  auto th = chart.angles(x0);
  CHECK(th[0] == 0.0);
  CHECK(th[1] == 0.0);
  Eigen::RowVectorXd rot = Eigen::RowVectorXd::Ones(2) * chart.frequencies();
  // X_{H1+H2} per unit time, in the period-1 frame of a reduced basis
  Eigen::MatrixXd expect(2, 2);
  expect << 2 * kPi, 0, 0, 2 * kPi / std::sqrt(2.0);
  auto u = unimodular_between(expect, chart.lattice(), 1e-6);
  REQUIRE(u.has_value());
  Eigen::RowVectorXd canonical_rot = rot * u->cast<double>();
  CHECK(canonical_rot(0) == doctest::Approx(1 / (2 * kPi)).epsilon(1e-9));
  CHECK(canonical_rot(1) == doctest::Approx(std::sqrt(2.0) / (2 * kPi)).epsilon(1e-9));
  // angle map inverts point()
  std::vector<double> t{0.3, 0.71};
  auto y = chart.point(t);
  auto back = chart.angles(y);
  CHECK(back[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(back[1] == doctest::Approx(0.71).epsilon(1e-9));
}

TEST_CASE("build_chart: pendulum frequency is the reciprocal period") {
  auto s = testsupport::pendulum();
  auto chart = build_chart(s, testsupport::pendulum_seed(-0.5));
  CHECK(std::fabs(chart.frequencies()(0, 0) - 1.0 / pendulum_period(-0.5)) <= 1e-8);
}

TEST_CASE("verify_quasiperiodicity") {
  auto s = testsupport::oscillator_pair();
  std::vector<double> x0{1.0, 0.0, 0.8, 0.0};
  auto chart = build_chart(s, x0);
  auto q = verify_quasiperiodicity(chart, s.fields[0] + s.fields[1], 200);
  CHECK(q.residual <= 1e-6);
  auto pen = testsupport::pendulum();
  auto pc = build_chart(pen, testsupport::pendulum_seed(-0.5));
  CHECK(verify_quasiperiodicity(pc, pen.fields[0], 200).residual <= 1e-6);
  // perturbed field X_2 + 0.1 x1 d/dx1
  VectorFieldExpr bad = s.fields[1];
  bad.comp[0] = canonical(bad.comp[0] + parse_expr("x1/10", s.coords));
  auto r = verify_quasiperiodicity(chart, bad, 200);
  MESSAGE("perturbed residual " << r.residual);
  CHECK(r.residual > 1e-3);
}

TEST_CASE("property: lattice bases from different seeds on one torus are unimodularly equivalent") {
  auto s = testsupport::oscillator_pair();
  std::vector<double> x0{1.0, 0.0, 0.8, 0.0};
  auto chart = build_chart(s, x0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 10; ++n) {
    std::vector<double> th{u(rng), u(rng)};
    auto seed = chart.point(th);
    auto l = find_period_lattice(s, seed);
    auto um = unimodular_between(chart.lattice(), l, 1e-6);
    REQUIRE(um.has_value());
    CHECK(std::fabs(um->cast<double>().determinant()) == doctest::Approx(1.0));
  }
}

TEST_CASE("property: first integrals are constant on the torus; flows commute in any order") {
  auto s = testsupport::pendulum_oscillator();
  std::vector<double> x0{0.0, 1.0, 0.7, 0.0};
  auto flows = std::make_shared<const Flows>(s);
  auto chart = build_chart(flows, s.integrals, x0);
  Compiled f(s.integrals, 4);
  auto f0 = f.eval(x0);
  double worst = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    std::vector<double> th{u(rng), u(rng)};
    auto fy = f.eval(chart.point(th));
    for (std::size_t j = 0; j < fy.size(); ++j) worst = std::max(worst, std::fabs(fy[j] - f0[j]));
  }
  CHECK(worst <= 1e-7);
  std::vector<double> tau{1.3, -2.1};
  std::vector<std::size_t> o1{0, 1}, o2{1, 0};
  CHECK(dist(flows->flow_composed(tau, x0, o1), flows->flow_composed(tau, x0, o2)) <= 1e-8);
  CHECK(dist(flows->flow_composed(tau, x0, o1), flows->flow(tau, x0)) <= 1e-8);
}

TEST_CASE("check_system: commutation, invariance and seed regularity") {
  auto s = testsupport::oscillator_pair();
  std::vector<std::vector<double>> pts{{0.1, 0.2, 0.3, 0.4}, {-0.5, 0.3, 0.2, -0.1}};
  auto r = check_system(s, std::vector<double>{1.0, 0.0, 0.8, 0.0}, pts);
  CHECK(r.commute <= 1e-12);
  CHECK_THROWS_AS(check_system(s, std::vector<double>{0.0, 0.0, 0.8, 0.0}, pts), Error);
  auto bad = s;
  bad.fields[1].comp[0] = canonical(bad.fields[1].comp[0] + parse_expr("x1/10", s.coords));
  try {
    check_system(bad, std::vector<double>{1.0, 0.0, 0.8, 0.0}, pts);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HypothesisViolated);
  }
  auto counts = s;
  counts.integrals.pop_back();
  CHECK_THROWS_AS(validate(counts), Error);
}

TEST_CASE("torus grid and CSV") {
  auto s = testsupport::oscillator();
  auto chart = build_chart(s, std::vector<double>{1.0, 0.0});
  auto g = torus_grid(chart, 8, true, 2);
  REQUIRE(g.x.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    double t = 2 * kPi * static_cast<double>(i) / 8.0;
    CHECK(g.x[i][0] == doctest::Approx(std::cos(t)).epsilon(1e-9));
    CHECK(g.x[i][1] == doctest::Approx(std::sin(t)).epsilon(1e-9));
    // the flow of a rotation is its own derivative
    CHECK(g.jac[i][0] == doctest::Approx(std::cos(t)).epsilon(1e-8));
    CHECK(g.jac[i][2] == doctest::Approx(std::sin(t)).epsilon(1e-8));
  }
  auto csv = grid_csv(g, s.coords);
  CHECK(csv.rfind("theta_1,x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}
