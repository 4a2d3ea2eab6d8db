#include <cmath>
#include <numbers>

#include "doctest.h"
#include "liouville/conservation.hpp"
#include "oracles.hpp"
#include "systems.hpp"
#include "tensors.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const std::vector<double>& v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::fabs(x));
  return r;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

const std::vector<double> kPairSeed{1.0, 0.0, 0.5, 0.0};
const std::vector<double> kPendOscSeed{0.0, 1.0, 1.0, 0.0};

}  // namespace

TEST_CASE("torus average: zero-mean mode vanishes") {
  auto s = testsupport::oscillator();
  auto chart = build_chart(s, std::vector<double>{1.0, 0.0});
  // y * X = sin(2 pi theta) Z / (2 pi) up to orientation
  auto g = TensorField::vector(parse_expr("y", s.coords) * s.fields[0]);
  auto avg = torus_average(g, chart, 32);
  CHECK(max_abs(avg.mean) <= 1e-10);
  CHECK(avg.deviation > 0.05);
}

TEST_CASE("torus average: omega is its own average on the oscillator family") {
  auto s = testsupport::oscillator();
  for (double e : {0.5, 1.0, 2.0}) {
    auto chart = build_chart(s, std::vector<double>{std::sqrt(2 * e), 0.0});
    auto frames = liouville_frames(chart, 16);
    auto avg = torus_average(s.omega->as_tensor(), frames);
    auto back = to_ambient(avg, frames);
    for (const auto& b : back) {
      CHECK(std::fabs(b[1] - 1.0) <= 1e-8);
      CHECK(std::fabs(b[2] + 1.0) <= 1e-8);
    }
    CHECK(avg.deviation <= 1e-8);
  }
}

TEST_CASE("torus average: x dx against the quadrature oracle") {
  auto s = testsupport::oscillator();
  const double e = 0.8, r = std::sqrt(2 * e);
  auto chart = build_chart(s, std::vector<double>{r, 0.0});
  auto g = TensorField::covector({parse_expr("x", s.coords), Expr()});
  auto avg = torus_average(g, chart, 32);
  // frame (Z, ds/dE): Z = 2 pi X has x-component -/+ 2 pi y, ds/dE is the seed
  // direction / r rotated with the flow; x = r cos(2 pi t), y = -/+ r sin(2 pi t)
  const double zx = testsupport::periodic_mean([&](double t) {
    return 2 * kPi * r * std::cos(2 * kPi * t) * r * std::sin(2 * kPi * t);
  });
  const double fx = testsupport::periodic_mean([&](double t) {
    const double x = r * std::cos(2 * kPi * t);
    return x * std::cos(2 * kPi * t) / r;
  });
  CHECK(std::fabs(avg.mean[0] - zx) <= 1e-8);
  CHECK(std::fabs(avg.mean[1] - fx) <= 1e-8);
  CHECK(std::fabs(avg.mean[1] - 0.5) <= 1e-8);
}

TEST_CASE("torus average: projector and pairwise determinism") {
  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, kPairSeed);
  auto frames = liouville_frames(chart, 16);
  auto g = tensor_product(TensorField::covector({parse_expr("x1*y2", s.coords), Expr(), Expr(), Expr()}),
                          TensorField::vector(s.fields[1]));
  auto a1 = torus_average(g, frames, 1);
  auto a4 = torus_average(g, frames, 4);
  for (std::size_t c = 0; c < a1.mean.size(); ++c) CHECK(a1.mean[c] == a4.mean[c]);
  auto a2 = torus_average(to_ambient(a1, frames), g.up(), g.down(), frames);
  for (std::size_t c = 0; c < a1.mean.size(); ++c) CHECK(std::fabs(a2.mean[c] - a1.mean[c]) <= 1e-12);
  CHECK(a2.deviation <= 1e-12);
}

TEST_CASE("torus average: equivariance under a unimodular basis change") {
  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, kPairSeed);
  Eigen::MatrixXi u(2, 2);
  u << 2, 1, 1, 1;
  auto g = tensor_product(TensorField::differential(parse_expr("x1*x2 + y1", s.coords), 4),
                          TensorField::vector(s.fields[0]));
  auto avg = torus_average(g, chart, 16);
  auto moved = torus_average(g, chart.with_basis(u), 16);
  auto expect = change_basis(avg, chart.p(), u);
  for (std::size_t c = 0; c < expect.size(); ++c) CHECK(std::fabs(moved.mean[c] - expect[c]) <= 1e-10);
}

TEST_CASE("conservation: invariant suite on two systems") {
  for (auto [name, spec, seed] : {std::tuple{"oscillator pair", testsupport::oscillator_pair(), kPairSeed},
                                  std::tuple{"pendulum x oscillator", testsupport::pendulum_oscillator(), kPendOscSeed}}) {
    CAPTURE(name);
    auto chart = build_chart(spec, seed);
    for (const auto& [tname, g] : testsupport::invariant_suite(spec)) {
      CAPTURE(tname);
      auto rep = conservation_check(g, spec, chart, {.grid = 16});
      CHECK(rep.pass);
      CHECK(rep.average.deviation <= 1e-6);
      CHECK(rep.average.fourier <= 1e-6);
      for (double l : rep.lie) CHECK(l <= 1e-8);
    }
  }
}

TEST_CASE("conservation: non-invariant tensors fail the hypothesis") {
  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, kPairSeed);
  auto g = TensorField::covector({parse_expr("x1", s.coords), Expr(), Expr(), Expr()});
  try {
    conservation_check(g, s, chart);
    FAIL("expected HypothesisViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HypothesisViolated);
    CHECK(std::string(e.what()).find("L_X1") != std::string::npos);
  }
}

TEST_CASE("conservation: a single completely irrational field suffices") {
  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, kPairSeed);
  auto g = tensor_product(TensorField::differential(s.hamiltonians[0], 4),
                          TensorField::differential(s.hamiltonians[1], 4));
  auto mixed = s;
  mixed.fields[0] = s.fields[0] + s.fields[1];
  auto rep = conservation_check(g, mixed, chart, {.grid = 16, .first_field_only = true});
  CHECK(rep.pass);
  CHECK(rep.lie.size() == 1);
  // X_1 alone rotates one circle only: resonant
  CHECK(kind_of([&] { conservation_check(g, s, chart, {.grid = 16, .first_field_only = true}); }) ==
        ErrorKind::HypothesisViolated);
}

TEST_CASE("conformal: invariant multiples and a sign-changing coefficient") {
  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, kPairSeed);
  auto w = s.omega->as_tensor();
  auto scaled = parse_expr("exp(x1^2+y1^2)", s.coords) * w;
  auto r0 = conformal_check(scaled, s, chart, {.grid = 16});
  CHECK(r0.pass);
  CHECK(max_abs(r0.f_max) <= 1e-8);
  auto rep = conformal_check(parse_expr("x1^2+y1^2", s.coords) * w, s, chart, {.grid = 16});
  CHECK(rep.pass);
  CHECK(max_abs(rep.g_max) <= 1e-6);
  CHECK(rep.residual_generators <= 1e-5);
  CHECK(kind_of([&] { conformal_check(parse_expr("x1", s.coords) * w, s, chart, {.grid = 16}); }) ==
        ErrorKind::NotConformal);
}

TEST_CASE("irrationality probe") {
  std::vector<double> r2{1.0 / (2 * kPi), std::sqrt(2.0) / (2 * kPi)};
  auto a = irrationality_probe(r2);
  CHECK_FALSE(a.resonant);
  REQUIRE(!a.convergents.empty());
  // convergents of sqrt 2: 1, 3/2, 7/5, 17/12, ...
  CHECK(a.convergents[1].num == 3);
  CHECK(a.convergents[1].den == 2);
  CHECK(a.convergents.back().den <= 10000);

  std::vector<double> two{1.0, 2.0};
  auto b = irrationality_probe(two);
  REQUIRE(b.resonant);
  CHECK(b.resonances[0].num == 2);
  CHECK(b.resonances[0].den == 1);

  std::vector<double> half{1.0, 1.5};
  auto c = irrationality_probe(half);
  REQUIRE(c.resonant);
  CHECK(c.resonances[0].num == 3);
  CHECK(c.resonances[0].den == 2);

  auto s = testsupport::oscillator_pair();
  auto chart = build_chart(s, kPairSeed);
  CHECK_FALSE(irrationality_probe(chart, s.fields[0] + s.fields[1]).resonant);
  CHECK(irrationality_probe(chart, s.fields[0]).resonant);
}

TEST_CASE("deviation CSV") {
  auto s = testsupport::oscillator();
  auto chart = build_chart(s, std::vector<double>{1.0, 0.0});
  auto frames = liouville_frames(chart, 8);
  auto avg = torus_average(TensorField::covector({parse_expr("x", s.coords), Expr()}), frames);
  auto csv = deviation_csv(avg, frames.grid);
  CHECK(csv.rfind("theta_1,deviation\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}
