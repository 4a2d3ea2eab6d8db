#include <cmath>
#include <numbers>

#include "doctest.h"
#include "liouville/actionangle.hpp"
#include "oracles.hpp"
#include "systems.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Expr> form(std::initializer_list<const char*> comps, const std::vector<std::string>& coords) {
  std::vector<Expr> out;
  for (const char* c : comps) out.push_back(parse_expr(c, coords));
  return out;
}

SystemSpec unit_pair() {
  return testsupport::hamiltonian_system({"x1", "y1", "x2", "y2"}, testsupport::canonical_form(4, {0, 2}, {1, 3}),
                                         {"(x1^2+y1^2)/2", "(x2^2+y2^2)/2"});
}

SystemSpec unit_triple() {
  return testsupport::hamiltonian_system({"x1", "y1", "x2", "y2", "x3", "y3"},
                                         testsupport::canonical_form(6, {0, 2, 4}, {1, 3, 5}),
                                         {"(x1^2+y1^2)/2", "(x2^2+y2^2)/2", "(x3^2+y3^2)/2"});
}

std::vector<double> osc_seed(double e) { return {std::sqrt(2.0 * e), 0.0}; }

}  // namespace

TEST_CASE("mineur: oscillator area law and primitive independence") {
  auto s = testsupport::oscillator();
  auto a1 = form({"0", "x"}, s.coords);
  auto a2 = form({"-y/2", "x/2"}, s.coords);
  for (double e : {0.5, 1.0, 1.5}) {
    auto chart = build_chart(s, osc_seed(e));
    auto r1 = mineur_integral(chart, a1, 0, *s.omega);
    auto r2 = mineur_integral(chart, a2, 0, *s.omega);
    CHECK(std::fabs(r1.value - 2 * kPi * e) <= 1e-8);
    CHECK(std::fabs(r1.value - r2.value) <= 1e-8);
    CHECK(r1.error <= 1e-8);
    CHECK(r1.closure <= 1e-7);
  }
}

TEST_CASE("mineur: pendulum against the area oracle") {
  auto s = testsupport::pendulum();
  auto alpha = form({"p", "0"}, s.coords);
  for (double e : {-0.8, -0.5, -0.2}) {
    auto chart = build_chart(s, testsupport::pendulum_seed(e));
    auto r = mineur_integral(chart, alpha, 0, *s.omega);
    CHECK(std::fabs(r.value - testsupport::pendulum_area(e)) <= 1e-6);
    CHECK(r.error <= 1e-8);
  }
}

TEST_CASE("mineur: wrong primitive is refused") {
  auto s = testsupport::oscillator();
  auto chart = build_chart(s, osc_seed(1.0));
  auto bad = form({"0", "2*x"}, s.coords);
  try {
    mineur_action(chart, bad, 0, *s.omega);
    FAIL("expected PrimitiveMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PrimitiveMismatch);
  }
  // non-polynomial primitive that only agrees numerically
  auto ok = form({"0", "x + sin(y)^2 - sin(y)^2"}, s.coords);
  CHECK(mineur_action(chart, ok, 0, *s.omega) == doctest::Approx(2 * kPi).epsilon(1e-10));
}

TEST_CASE("action profile: cycles close and CSV columns") {
  auto s = unit_pair();
  auto chart = build_chart(s, std::vector<double>{1.0, 0.0, 0.5, 0.0});
  auto alpha = form({"0", "x1", "0", "x2"}, s.coords);
  auto prof = action_profile(chart, alpha, *s.omega, "T1");
  REQUIRE(prof.cycles.size() == 2);
  for (const auto& c : prof.cycles) CHECK(testsupport::dist(c.front(), c.back()) <= 1e-7);
  CHECK(prof.mode == ActionMode::Symplectic);
  std::vector<ActionProfile> ps{prof};
  auto csv = profile_csv(ps);
  CHECK(csv.substr(0, csv.find('\n')) == "torus_id,mode,F_1,F_2,mu_1,mu_2,r_1,r_2");
}

TEST_CASE("leafwise: oscillator family follows 2 pi dE") {
  auto s = testsupport::oscillator();
  auto ref = build_chart(s, osc_seed(1.0));
  auto alpha = form({"0", "x"}, s.coords);
  const double m_ref = mineur_action(ref, alpha, 0, *s.omega);
  for (double e : {0.5, 1.0, 1.5}) {
    auto r = leafwise_action(ref, s.hamiltonians, std::vector<double>{e});
    CHECK(std::fabs(r.mu[0] - 2 * kPi * (e - 1.0)) <= 1e-7);
    auto chart = build_chart(s, osc_seed(e));
    CHECK(std::fabs(r.mu[0] - (mineur_action(chart, alpha, 0, *s.omega) - m_ref)) <= 1e-7);
  }
  auto zero = leafwise_action(ref, s.hamiltonians, ref.levels());
  CHECK(zero.mu[0] == 0.0);
}

TEST_CASE("leafwise: pendulum derivative is the period") {
  auto s = testsupport::pendulum();
  for (double e : {-0.8, -0.5, -0.2}) {
    auto ref = build_chart(s, testsupport::pendulum_seed(e));
    const double h = 1e-3;
    auto up = leafwise_action(ref, s.hamiltonians, std::vector<double>{e + h});
    auto dn = leafwise_action(ref, s.hamiltonians, std::vector<double>{e - h});
    const double d = (up.mu[0] - dn.mu[0]) / (2 * h);
    CHECK(std::fabs(d - testsupport::pendulum_period(e)) <= 1e-4);
  }
  auto ref = build_chart(s, testsupport::pendulum_seed(-0.5));
  auto r = leafwise_action(ref, s.hamiltonians, std::vector<double>{-0.2});
  CHECK(std::fabs(r.mu[0] - (testsupport::pendulum_area(-0.2) - testsupport::pendulum_area(-0.5))) <= 1e-6);
}

TEST_CASE("leafwise: two paths agree on a product system") {
  auto s = testsupport::pendulum_oscillator();
  auto ref = build_chart(s, std::vector<double>{0.0, 1.0, 1.0, 0.0});
  std::vector<double> target{ref.levels()[0] + 0.1, ref.levels()[1] - 0.2};
  auto r = leafwise_action(ref, s.hamiltonians, target);
  CHECK(r.path_discrepancy <= 1e-7);
}

TEST_CASE("leafwise: non-closed rho is reported") {
  // A first Hamiltonian that does not generate X_1 makes rho = T(H_1) dH'_1 non-closed.
  auto s = testsupport::pendulum_oscillator();
  auto ref = build_chart(s, std::vector<double>{0.0, 1.0, 1.0, 0.0});
  std::vector<Expr> hams{parse_expr("p^2/2 - cos(q) + (x^2+y^2)^2/8", s.coords), s.hamiltonians[1]};
  std::vector<double> target{ref.levels()[0] + 0.1, ref.levels()[1] - 0.2};
  try {
    leafwise_action(ref, hams, target);
    FAIL("expected PathInconsistency");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PathInconsistency);
  }
}

TEST_CASE("verify_action: oscillator and pendulum") {
  auto s = testsupport::oscillator();
  auto chart = build_chart(s, osc_seed(1.0));
  std::vector<Expr> good{parse_expr("2*pi*(x^2+y^2)/2", s.coords)};
  auto r = verify_action(chart, good, *s.omega);
  CHECK(r.residual[0] <= 1e-6);
  CHECK(r.pass);
  std::vector<Expr> wrong{parse_expr("(x^2+y^2)/2", s.coords)};
  auto w = verify_action(chart, wrong, *s.omega);
  CHECK_FALSE(w.pass);
  CHECK(w.residual[0] == doctest::Approx((2 * kPi - 1) * std::sqrt(2.0)).epsilon(1e-6));

  auto pend = testsupport::pendulum();
  auto pc = build_chart(pend, testsupport::pendulum_seed(-0.5));
  auto leaf = verify_action(pc, leafwise_map(pc, pend.hamiltonians), *pend.omega);
  CHECK(leaf.residual[0] <= 1e-4);
  auto mineur = verify_action(pc, mineur_map(pc, form({"p", "0"}, pend.coords), *pend.omega), *pend.omega);
  CHECK(mineur.residual[0] <= 1e-4);
}

TEST_CASE("mineur and leafwise differ by a constant") {
  auto s = testsupport::pendulum_oscillator();
  auto alpha = form({"p", "0", "0", "x"}, s.coords);
  auto ref = build_chart(s, std::vector<double>{0.0, 1.0, 1.0, 0.0});
  auto mm = mineur_map(ref, alpha, *s.omega);
  auto lm = leafwise_map(ref, s.hamiltonians);
  std::vector<std::vector<double>> levels{ref.levels(), {-0.3, 0.4}, {-0.6, 0.7}, {-0.45, 0.55}};
  std::vector<double> lo(2, INFINITY), hi(2, -INFINITY);
  for (const auto& z : levels) {
    auto a = mm(z), b = lm(z);
    for (std::size_t k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], a[k] - b[k]);
      hi[k] = std::max(hi[k], a[k] - b[k]);
    }
  }
  for (std::size_t k = 0; k < 2; ++k) CHECK(hi[k] - lo[k] <= 1e-6);
}

TEST_CASE("unimodular change of basis transforms actions by U") {
  auto s = unit_pair();
  auto chart = build_chart(s, std::vector<double>{1.0, 0.0, 0.6, 0.0});
  auto alpha = form({"0", "x1", "0", "x2"}, s.coords);
  Eigen::MatrixXi u(2, 2);
  u << 2, 1, 1, 1;
  auto c2 = chart.with_basis(u);
  Eigen::Vector2d mu(mineur_action(chart, alpha, 0, *s.omega), mineur_action(chart, alpha, 1, *s.omega));
  Eigen::Vector2d mu2(mineur_action(c2, alpha, 0, *s.omega), mineur_action(c2, alpha, 1, *s.omega));
  CHECK((mu2 - u.cast<double>() * mu).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("isotropy and dimension bound") {
  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, std::vector<double>{1.0, 0.2, 0.5, -0.3});
  CHECK(isotropy_defect(chart, *s.omega, s.hamiltonians, 1000) <= 1e-7);

  // two rotations of the plane (x, y) against a rank-2 form on R^3
  std::vector<std::string> c{"x", "y", "z"};
  Structure2Form w(3);
  w.set(0, 1, Expr::constant(1));
  CHECK_NOTHROW(check_dimension_bound(2, w, std::vector<double>{1, 0, 0}));
  CHECK_THROWS_AS(check_dimension_bound(3, w, std::vector<double>{1, 0, 0}), Error);
  try {
    check_dimension_bound(3, w, std::vector<double>{1, 0, 0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionBound);
  }
}

TEST_CASE("normal form: oscillator pair, symplectic") {
  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, std::vector<double>{1.0, 0.2, 0.5, -0.3});
  auto rep = assemble_normal_form(chart, *s.omega, NormalMode::Symplectic);
  CHECK(rep.magnetic_norm <= 1e-7);
  CHECK(rep.residual <= 1e-5);
  CHECK(rep.isotropy <= 1e-7);
  CHECK(rep.closedness == 0.0);
  // d mu / dH is 2 pi / frequency; the shorter generator comes first
  CHECK(rep.action_jacobian(0, 1) == doctest::Approx(2 * kPi / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(rep.action_jacobian(1, 0) == doctest::Approx(2 * kPi).epsilon(1e-6));
  CHECK(std::fabs(rep.action_jacobian(0, 0)) + std::fabs(rep.action_jacobian(1, 1)) <= 1e-8);
}

TEST_CASE("normal form: product with a pendulum") {
  auto s = testsupport::pendulum_oscillator();
  auto chart = build_chart(s, std::vector<double>{0.0, 1.0, 1.0, 0.0});
  auto rep = assemble_normal_form(chart, *s.omega, NormalMode::Symplectic);
  CHECK(rep.residual <= 1e-5);
  // oscillator generator first (2 pi < T(-0.5))
  CHECK(rep.action_jacobian(0, 1) == doctest::Approx(2 * kPi).epsilon(1e-6));
  CHECK(rep.action_jacobian(1, 0) == doctest::Approx(testsupport::pendulum_period(-0.5)).epsilon(1e-5));
}

TEST_CASE("normal form: magnetic block of a general 2-form") {
  // omega = dx^dy + z dz^dw, rotation in (x, y), integrals r^2/2, z, w
  std::vector<std::string> c{"x", "y", "z", "w"};
  SystemSpec s;
  s.coords = c;
  s.fields.push_back(VectorFieldExpr({parse_expr("-y", c), parse_expr("x", c), Expr(), Expr()}));
  s.integrals = {parse_expr("(x^2+y^2)/2", c), parse_expr("z", c), parse_expr("w", c)};
  Structure2Form w(4);
  w.set(0, 1, Expr::constant(1));
  w.set(2, 3, parse_expr("z", c));
  auto chart = build_chart(s, std::vector<double>{1.0, 0.0, 0.5, 0.3});
  auto rep = assemble_normal_form(chart, w, NormalMode::General2Form);
  REQUIRE(rep.magnetic.rows() == 3);
  CHECK(rep.magnetic(1, 2) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(rep.magnetic_norm >= 0.4);
  CHECK(rep.isotropy <= 1e-9);
  CHECK(rep.action_jacobian(0, 0) == doctest::Approx(2 * kPi).epsilon(1e-6));
  CHECK(rep.action_jacobian(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));

  try {
    assemble_normal_form(chart, w, NormalMode::Symplectic);
    FAIL("expected ModeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ModeMismatch);
  }
}

TEST_CASE("normal form: degenerate form in symplectic mode") {
  auto s = testsupport::oscillator();
  auto chart = build_chart(s, osc_seed(1.0));
  Structure2Form zero(2);
  try {
    assemble_normal_form(chart, zero, NormalMode::Symplectic);
    FAIL("expected ModeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ModeMismatch);
  }
}

TEST_CASE("normal form: Poisson cylinder family") {
  std::vector<std::string> c{"x", "y", "c"};
  PoissonBivector pi(3);
  pi.set(0, 1, Expr::constant(1));
  Expr h = parse_expr("(1+c^2)*(x^2+y^2)/2", c);
  SystemSpec s;
  s.coords = c;
  s.fields.push_back(hamiltonian_vf_poisson(pi, h));
  s.integrals = {h, parse_expr("c", c)};
  s.hamiltonians = {h};
  s.poisson = pi;
  auto chart = build_chart(s, std::vector<double>{1.0, 0.3, 0.5});
  auto rep = assemble_normal_form(chart, pi, NormalMode::Poisson);
  CHECK(rep.residual <= 1e-6);
  CHECK(rep.magnetic_norm <= 1e-6);
  CHECK(isotropy_defect(chart, pi, s.hamiltonians, 200) <= 1e-12);
  auto r = verify_action(chart, leafwise_map(chart, s.hamiltonians), pi);
  CHECK(r.pass);
  // wrong structure for the mode
  CHECK_THROWS_AS(assemble_normal_form(chart, Structure2Form(3), NormalMode::Poisson), Error);
}

TEST_CASE("co-affine chart: isoenergy slices") {
  auto s = unit_pair();
  auto alpha = form({"0", "x1", "0", "x2"}, s.coords);
  std::vector<CoaffineSample> iso;
  for (double a : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    auto chart = build_chart(s, std::vector<double>{std::sqrt(2 * a), 0.0, std::sqrt(2 * (1 - a)), 0.0});
    iso.push_back(coaffine_sample(chart, alpha, *s.omega, "a" + std::to_string(a)));
    CHECK(std::fabs(iso.back().mu[0] + iso.back().mu[1] - 2 * kPi) <= 1e-8);
  }
  auto cc = coaffine_chart(iso, 1);
  CHECK(cc.rank == 1);
  CHECK(cc.degree() == 1);

  std::vector<CoaffineSample> full;
  for (double a : {0.3, 0.6})
    for (double b : {0.4, 0.7, 1.0}) {
      auto chart = build_chart(s, std::vector<double>{std::sqrt(2 * a), 0.0, std::sqrt(2 * b), 0.0});
      full.push_back(coaffine_sample(chart, alpha, *s.omega, "f"));
    }
  auto cf = coaffine_chart(full, 2);
  CHECK(cf.rank == 2);
  CHECK(cf.degree() == 0);

  auto t = unit_triple();
  auto alpha3 = form({"0", "x1", "0", "x2", "0", "x3"}, t.coords);
  std::vector<CoaffineSample> iso3;
  for (double a : {0.2, 0.3, 0.4})
    for (double b : {0.2, 0.3, 0.4}) {
      const double c3 = 1.0 - a - b;
      auto chart = build_chart(
          t, std::vector<double>{std::sqrt(2 * a), 0.0, std::sqrt(2 * b), 0.0, std::sqrt(2 * c3), 0.0});
      iso3.push_back(coaffine_sample(chart, alpha3, *t.omega, "t"));
    }
  auto c3 = coaffine_chart(iso3, 2);
  CHECK(c3.rank == 2);
  CHECK(c3.degree() == 1);
}

TEST_CASE("co-affine chart: unstable rank") {
  // straight for t < 0.45, bending afterwards
  std::vector<CoaffineSample> v;
  for (int i = 0; i < 10; ++i) {
    const double t = 0.1 * i;
    const double bend = t < 0.45 ? 0.0 : 5.0 * (t - 0.45) * (t - 0.45);
    v.push_back({"u" + std::to_string(i), {t}, {t, t + bend}});
  }
  try {
    coaffine_chart(v, 1);
    FAIL("expected RankUnstable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RankUnstable);
  }
}

TEST_CASE("normal form: sheared pair needs an angle shift") {
  // unit pair pulled back by x1' = 2 x1 + y2/2: omega = 2 dx1^dy1 - dy1^dy2/2 + dx2^dy2,
  // so the gradient section is no longer isotropic
  std::vector<std::string> c{"x1", "y1", "x2", "y2"};
  Structure2Form w(4);
  w.set(0, 1, Expr::constant(2));
  w.set(1, 3, Expr::constant(Rational(-1, 2)));
  w.set(2, 3, Expr::constant(1));
  auto s = testsupport::hamiltonian_system(c, w, {"((2*x1+y2/2)^2+y1^2)/2", "(x2^2+y2^2)/2"});
  auto chart = build_chart(s, std::vector<double>{0.45, 0.4, -0.3, 0.7});
  CHECK(isotropy_defect(chart, w, s.hamiltonians, 1000) <= 1e-7);
  auto rep = assemble_normal_form(chart, w, NormalMode::Symplectic);
  CHECK(rep.magnetic_norm >= 1e-4);
  CHECK(rep.angle_shift.cwiseAbs().maxCoeff() >= 1e-4);
  CHECK(rep.residual <= 1e-5);
}
