#pragma once

// Test systems shared by the unit and acceptance suites.

#include <cmath>

#include "liouville/torusflow.hpp"

namespace testsupport {

inline const char* kSqrt2 = "1.41421356237309504880168872420969807857";

inline liouville::Structure2Form canonical_form(std::size_t n, const std::vector<std::size_t>& xs,
                                                const std::vector<std::size_t>& ys) {
  liouville::Structure2Form w(n);
  for (std::size_t i = 0; i < xs.size(); ++i) w.set(xs[i], ys[i], liouville::Expr::constant(1));
  return w;
}

// Builds fields from Hamiltonians with the given 2-form; integrals = Hamiltonians.
inline liouville::SystemSpec hamiltonian_system(std::vector<std::string> coords, liouville::Structure2Form omega,
                                                const std::vector<std::string>& hams,
                                                liouville::IrrationalBasis basis = {}) {
  liouville::SystemSpec s;
  s.coords = std::move(coords);
  s.basis = std::move(basis);
  for (const auto& h : hams) {
    auto e = liouville::parse_expr(h, s.coords, s.basis);
    s.hamiltonians.push_back(e);
    s.integrals.push_back(e);
    s.fields.push_back(liouville::hamiltonian_vf_2form(omega, e).field);
  }
  s.omega = std::move(omega);
  return s;
}

inline liouville::SystemSpec oscillator() {
  return hamiltonian_system({"x", "y"}, canonical_form(2, {0}, {1}), {"(x^2+y^2)/2"});
}

inline liouville::SystemSpec oscillator_pair() {
  liouville::IrrationalBasis b;
  b.add("s2", kSqrt2);
  return hamiltonian_system({"x1", "y1", "x2", "y2"}, canonical_form(4, {0, 2}, {1, 3}),
                            {"(x1^2+y1^2)/2", "s2*(x2^2+y2^2)/2"}, b);
}

inline liouville::SystemSpec oscillator_triple() {
  liouville::IrrationalBasis b;
  b.add("s2", kSqrt2);
  b.add("s3", "1.73205080756887729352744634150587236694");
  return hamiltonian_system({"x1", "y1", "x2", "y2", "x3", "y3"}, canonical_form(6, {0, 2, 4}, {1, 3, 5}),
                            {"(x1^2+y1^2)/2", "s2*(x2^2+y2^2)/2", "s3*(x3^2+y3^2)/2"}, b);
}

// (q, p) with omega = dp ^ dq, so that alpha = p dq is a primitive and the
// flow is q' = p, p' = -sin q.
inline liouville::Structure2Form pendulum_form() {
  liouville::Structure2Form w(2);
  w.set(1, 0, liouville::Expr::constant(1));
  return w;
}

inline liouville::SystemSpec pendulum() {
  return hamiltonian_system({"q", "p"}, pendulum_form(), {"p^2/2 - cos(q)"});
}

inline liouville::SystemSpec pendulum_oscillator() {
  liouville::Structure2Form w(4);
  w.set(1, 0, liouville::Expr::constant(1));
  w.set(2, 3, liouville::Expr::constant(1));
  return hamiltonian_system({"q", "p", "x", "y"}, w, {"p^2/2 - cos(q)", "(x^2+y^2)/2"});
}

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Seed on the pendulum level E at q = 0.
inline std::vector<double> pendulum_seed(double e) { return {0.0, std::sqrt(2.0 * (e + 1.0))}; }

}  // namespace testsupport
