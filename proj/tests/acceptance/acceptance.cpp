// Acceptance criteria: one PASS/FAIL line each. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "birkhoff.hpp"
#include "fields.hpp"
#include "liouville/cli.hpp"
#include "liouville/conservation.hpp"
#include "oracles.hpp"
#include "systems.hpp"
#include "tensors.hpp"

using namespace liouville;
namespace ts = testsupport;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

std::vector<Expr> form(std::initializer_list<const char*> c, const std::vector<std::string>& coords) {
  std::vector<Expr> out;
  for (const char* s : c) out.push_back(parse_expr(s, coords));
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

bool refused(const std::function<void()>& f, ErrorKind want) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == want;
  }
  return false;
}

// 1. period lattice and rotation vector of the (1, sqrt 2) oscillator pair
Outcome chart_oracle() {
  const auto s = ts::oscillator_pair();
  const auto chart = build_chart(s, std::vector<double>{1.0, 0.0, 0.5, 0.0});
  Eigen::MatrixXd ref(2, 2);
  ref << 2 * kPi, 0, 0, 2 * kPi / std::sqrt(2.0);
  const auto u = unimodular_between(chart.lattice(), ref, 1e-6);
  if (!u) return {false, "lattice is not a unimodular image of the reference"};
  const TorusChart aligned = chart.with_basis(*u);
  const double lat = (aligned.lattice() - ref).cwiseAbs().maxCoeff();
  const auto q = verify_quasiperiodicity(aligned, s.fields[0] + s.fields[1], 64);
  const double rot = std::max(std::fabs(q.rotation(0) - 1 / (2 * kPi)), std::fabs(q.rotation(1) - std::sqrt(2.0) / (2 * kPi)));
  return {lat <= 1e-6 && rot <= 1e-7, fmt("lattice err %.2e (tol 1e-6), rotation err %.2e (tol 1e-7)", lat, rot)};
}

// 2. pendulum: Mineur action against quadrature, dmu/dE against the period
Outcome pendulum_actions() {
  const auto s = ts::pendulum();
  const auto alpha = form({"p", "0"}, s.coords);
  double area = 0.0, period = 0.0;
  const double h = 1e-3;
  for (double e : {-0.8, -0.5, -0.2}) {
    auto mu = [&](double level) { return mineur_action(build_chart(s, ts::pendulum_seed(level)), alpha, 0, *s.omega); };
    area = std::max(area, std::fabs(mu(e) - ts::pendulum_area(e)));
    period = std::max(period, std::fabs((mu(e + h) - mu(e - h)) / (2 * h) - ts::pendulum_period(e)));
  }
  return {area <= 1e-6 && period <= 1e-4, fmt("action err %.2e (tol 1e-6), dmu/dE err %.2e (tol 1e-4)", area, period)};
}

// 3. Mineur and leafwise actions differ by a constant on the oscillator family
Outcome mineur_leafwise() {
  const auto s = ts::oscillator_pair();
  const auto alpha = form({"0", "x1", "0", "x2"}, s.coords);
  const auto ref = build_chart(s, std::vector<double>{1.0, 0.0, 0.5, 0.0});
  const auto mm = mineur_map(ref, alpha, *s.omega);
  const auto lm = leafwise_map(ref, s.hamiltonians);
  const std::vector<std::vector<double>> levels{
      ref.levels(), {0.6, 0.2}, {0.4, 0.15}, {0.55, 0.25}, {0.45, 0.19}};
  std::vector<double> lo(2, INFINITY), hi(2, -INFINITY);
  for (const auto& z : levels) {
    const auto a = mm(z), b = lm(z);
    for (std::size_t k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], a[k] - b[k]);
      hi[k] = std::max(hi[k], a[k] - b[k]);
    }
  }
  const double spread = std::max(hi[0] - lo[0], hi[1] - lo[1]);
  return {spread <= 1e-6, fmt("spread %.2e over %zu tori (tol 1e-6)", spread, levels.size())};
}

// 4. torus averages of invariant tensors; non-invariant tensors refused
Outcome conservation_suite() {
  struct Case {
    SystemSpec s;
    std::vector<double> seed;
  };
  std::vector<Case> cases{{ts::oscillator_pair(), {1.0, 0.0, 0.5, 0.0}}, {ts::pendulum_oscillator(), {0.0, 1.0, 1.0, 0.0}}};
  ConservationOptions opt;
  opt.grid = 16;
  double worst = 0.0;
  std::size_t checked = 0, controls = 0;
  bool ok = true;
  for (const auto& c : cases) {
    const auto chart = build_chart(c.s, c.seed);
    for (const auto& [id, g] : ts::invariant_suite(c.s)) {
      const auto r = conservation_check(g, c.s, chart, opt);
      worst = std::max(worst, r.average.deviation);
      ok = ok && r.average.deviation <= 1e-6;
      ++checked;
    }
    // d(first coordinate) and d/d(first coordinate) are moved by the flow
    const std::size_t m = c.s.m();
    std::vector<Expr> e0(m);
    e0[0] = Expr::constant(1);
    const std::vector<TensorField> negatives{
        TensorField::differential(parse_expr(c.s.coords[0], c.s.coords), m),
        TensorField::vector(VectorFieldExpr(e0))};
    for (const auto& g : negatives) {
      const bool r = refused([&] { conservation_check(g, c.s, chart, opt); }, ErrorKind::HypothesisViolated);
      ok = ok && r;
      controls += r;
    }
  }
  return {ok, fmt("%zu tensors, max deviation %.2e (tol 1e-6); %zu/4 negative controls refused", checked, worst, controls)};
}

// 5. isotropy of the Hamiltonian test systems and the dimension bound
Outcome isotropy() {
  struct Case {
    SystemSpec s;
    std::vector<double> seed;
  };
  std::vector<Case> cases{{ts::oscillator(), {1.0, 0.0}},
                          {ts::oscillator_pair(), {1.0, 0.2, 0.5, -0.3}},
                          {ts::oscillator_triple(), {1.0, 0.0, 0.5, 0.1, 0.7, 0.0}},
                          {ts::pendulum(), ts::pendulum_seed(-0.5)},
                          {ts::pendulum_oscillator(), {0.0, 1.0, 1.0, 0.0}}};
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto chart = build_chart(c.s, c.seed);
    worst = std::max(worst, isotropy_defect(chart, *c.s.omega, c.s.hamiltonians, 1000));
  }
  // rank-2 form on R^3 carries at most 2 fields; the pair's rank-4 form at most 2
  Structure2Form w(3);
  w.set(0, 1, Expr::constant(1));
  const bool r1 = refused([&] { check_dimension_bound(3, w, std::vector<double>{1, 0, 0}); }, ErrorKind::DimensionBound);
  const auto pair = ts::oscillator_pair();
  const bool r2 = refused([&] { check_dimension_bound(3, *pair.omega, std::vector<double>{1, 0, 0.5, 0}); },
                          ErrorKind::DimensionBound);
  const bool allowed = kind_of([&] { check_dimension_bound(2, *pair.omega, std::vector<double>{1, 0, 0.5, 0}); }) ==
                       ErrorKind::InvalidArgument;
  return {worst <= 1e-7 && r1 && r2 && allowed,
          fmt("max |omega(X_i,X_j)| %.2e over %zu systems (tol 1e-7); p > m - rank/2 refused: %s", worst, cases.size(),
              r1 && r2 && allowed ? "yes" : "no")};
}

// 6. symplectic normal form after the angle shift; co-affine rank on an isoenergy slice
Outcome symplectic_normal_form() {
  const auto s = ts::oscillator_pair();
  const auto chart = build_chart(s, std::vector<double>{1.0, 0.2, 0.5, -0.3});
  const auto rep = assemble_normal_form(chart, *s.omega, NormalMode::Symplectic);
  const auto alpha = form({"0", "x1", "0", "x2"}, s.coords);
  // H1 + H2 = 1 with H2 = sqrt2 (x2^2 + y2^2)/2
  std::vector<CoaffineSample> iso;
  for (double a : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    const double x2 = std::sqrt(2 * (1 - a) / std::sqrt(2.0));
    iso.push_back(coaffine_sample(build_chart(s, std::vector<double>{std::sqrt(2 * a), 0.0, x2, 0.0}), alpha, *s.omega,
                                  "a"));
  }
  const auto cc = coaffine_chart(iso, 1, 1e-8);
  return {rep.residual <= 1e-5 && cc.rank == s.p() - 1,
          fmt("residual %.2e (tol 1e-5); isoenergy co-affine rank %zu (want %zu)", rep.residual, cc.rank, s.p() - 1)};
}

// 7. exact normal forms: random inputs through degree 6, Birkhoff against the oracle
Outcome normal_form_exactness() {
  const auto k = ts::sqrt2_i();
  std::mt19937 rng(20240601);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto coeff = [&] { return k.rational(exact::Q(static_cast<long>(pick(9)) - 4) / exact::Q(static_cast<long>(1 + pick(4)))); };
  auto random_terms = [&](FormalSeries& f, std::size_t m, int lo, int hi, int count) {
    for (int t = 0; t < count; ++t) {
      Exponent e(m, 0);
      for (int d = lo + static_cast<int>(pick(static_cast<std::size_t>(hi - lo + 1))); d > 0; --d) ++e[pick(m)];
      f.add_term(e, coeff());
    }
  };
  const std::vector<const char*> pool{"1", "2", "-1", "s2", "1 + s2", "-s2", "i", "-i", "2*i", "is2", "1 + i"};
  std::size_t passed = 0, exact = 0;
  for (int trial = 0; trial < 20; ++trial) {
    PdResult r;
    if (trial % 2 == 0) {
      // vector fields on C^2 or C^3; every fourth one with a rotation block over Q(i)
      const std::size_t m = 2 + pick(2);
      VectorSeries x(m, FormalSeries(m, 6));
      for (std::size_t j = 0; j < m; ++j) {
        Exponent e(m, 0);
        e[j] = 1;
        x[j].add_term(e, k.parse(pool[pick(pool.size())]));
        random_terms(x[j], m, 2, 6, 4);
      }
      if (trial % 4 == 0) {
        Exponent e0(m, 0), e1(m, 0);
        e0[0] = 1;
        e1[1] = 1;
        x[0].add_term(e0, -x[0].coeff(e0));
        x[1].add_term(e1, -x[1].coeff(e1));
        x[0].add_term(e1, k.rational(-1));
        x[1].add_term(e0, k.rational(1));
      }
      r = pd_normalize(x, 6, PdMode::VectorField, k);
    } else {
      // Hamiltonians in 1 or 2 degrees of freedom, coordinates (x.., y..)
      const std::size_t n = 1 + pick(2), m = 2 * n;
      FormalSeries h(m, 6);
      const char* freq[] = {"1", "s2", "2", "1/2"};
      for (std::size_t j = 0; j < n; ++j) {
        Exponent ex(m, 0), ey(m, 0);
        ex[j] = 2;
        ey[n + j] = 2;
        const Scalar w = k.parse(freq[pick(4)]) * k.rational(exact::Q(1, 2));
        h.add_term(ex, w);
        h.add_term(ey, w);
      }
      random_terms(h, m, 3, 6, 6);
      r = pd_normalize({h}, 6, PdMode::Hamiltonian, k);
    }
    exact += is_zero(semisimple_defect(r));
    passed += is_zero(semisimple_defect(r)) && replay(r.input, r.log, r.mode, r.poisson) == r.normalized;
  }

  const auto g = ts::gaussian();
  std::vector<std::string> c{"x", "y"};
  const auto h = series_from_expr(parse_expr("(x^2+y^2)/2 + x^3", c, g.basis()), 2, 4, g);
  const auto r = pd_normalize({h}, 4, PdMode::Hamiltonian, g);
  const FormalSeries back = to_input_coordinates(r.normalized[0], r.frame).degree_part(4);
  const exact::Q alpha = ts::birkhoff_oracle();
  FormalSeries expect(2, 4);
  expect.add_term({4, 0}, g.rational(alpha));
  expect.add_term({2, 2}, g.rational(2 * alpha));
  expect.add_term({0, 4}, g.rational(alpha));
  const bool birkhoff = back == expect && alpha != 0;
  return {passed == 20 && birkhoff,
          fmt("%zu/20 random inputs commute exactly (%zu) and replay; Birkhoff degree 4 = %s (x^2+y^2)^2, oracle %s",
              passed, exact, birkhoff ? "oracle" : "MISMATCH", alpha.get_str().c_str())};
}

// 8. Williamson types and toric degrees
Outcome williamson_toric() {
  NumberField q;
  auto quad = [&](const char* src, std::vector<std::string> c) {
    return williamson_classify(series_from_expr(parse_expr(src, c), c.size(), 2, q));
  };
  const auto w1 = quad("(x^2+y^2)/2", {"x", "y"});
  const auto w2 = quad("(x1^2+y1^2)/2 + x2*y2", {"x1", "x2", "y1", "y2"});
  const auto w3 = quad("x1*y1 + x2*y2 + x1*y2 - x2*y1", {"x1", "x2", "y1", "y2"});
  auto triple = [](const WilliamsonType& w) { return std::array<std::size_t, 3>{w.ke, w.kh, w.kf}; };
  const bool types = triple(w1) == std::array<std::size_t, 3>{1, 0, 0} &&
                     triple(w2) == std::array<std::size_t, 3>{1, 1, 0} &&
                     triple(w3) == std::array<std::size_t, 3>{0, 0, 1};

  const auto k = ts::real_sqrt2();
  const std::vector<std::vector<Scalar>> gammas{
      {k.one(), k.generator(1)}, {k.rational(2), k.rational(4)}, {k.parse("1 + s2"), k.generator(1)}};
  const std::vector<std::size_t> want{2, 1, 2};
  bool toric = true;
  std::string got;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const auto t = toric_degree(gammas[i]);
    toric = toric && t.degree == want[i] && reconstructs(t, gammas[i]);
    got += (i ? "," : "") + std::to_string(t.degree);
  }
  return {types && toric, fmt("types (%zu,%zu,%zu) (%zu,%zu,%zu) (%zu,%zu,%zu); toric degrees %s with exact reconstruction: %s",
                              w1.ke, w1.kh, w1.kf, w2.ke, w2.kh, w2.kf, w3.ke, w3.kh, w3.kf, got.c_str(),
                              toric ? "yes" : "no")};
}

// 9. byte-identical reports modulo timing
Outcome determinism() {
  std::ifstream in(std::string(LIOUVILLE_CONFIG_DIR) + "/two_oscillators.cfg");
  std::ostringstream ss;
  ss << in.rdbuf();
  auto report = [&](std::size_t threads) {
    cli::Overrides ov;
    ov.threads = threads;
    auto r = cli::run(cli::Command::Analyze, cli::load_config(ss.str(), ov)).report;
    r.erase("timing");
    return cli::report_text(r);
  };
  const std::string a = report(1), b = report(1), c = report(4);
  return {a == b && a == c, fmt("%zu-byte report; two runs %s, threads 1 vs 4 %s", a.size(), a == b ? "equal" : "DIFFER",
                               a == c ? "equal" : "DIFFER")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget;   // seconds; 0 = none
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"Liouville chart oracle", 10, chart_oracle},
      {"Pendulum actions", 30, pendulum_actions},
      {"Mineur/leafwise equivalence", 0, mineur_leafwise},
      {"Fundamental conservation suite", 60, conservation_suite},
      {"Isotropy and dimension bound", 0, isotropy},
      {"Symplectic normal form", 0, symplectic_normal_form},
      {"Normal-form engine exactness", 20, normal_form_exactness},
      {"Williamson/toric", 0, williamson_toric},
      {"Determinism", 0, determinism},
  };
  int failed = 0, n = 0;
  for (const auto& c : criteria) {
    ++n;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0 && secs > c.budget) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget);
    }
    std::printf("%s %d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", n, c.name, o.detail.c_str(), secs);
    failed += !o.pass;
  }
  std::fflush(stdout);
  return failed ? 1 : 0;
}
