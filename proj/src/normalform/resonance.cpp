#include <functional>

#include "liouville/normalform.hpp"

namespace liouville {

namespace {

// Rows: coordinates of gamma_j over (1, beta_1, ...); columns: j.
exact::QMatrix coefficient_matrix(std::span<const Scalar> gamma) {
  std::size_t d = 1;
  for (const auto& g : gamma) d = std::max(d, g.dim());
  exact::QMatrix c(d, gamma.size());
  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t j = 0; j < gamma.size(); ++j) c(l, j) = gamma[j].coeff(l);
  return c;
}

Scalar basis_element(std::span<const Scalar> gamma, std::size_t l) {
  for (const auto& g : gamma)
    if (g.field() && l < g.dim()) {
      std::vector<Rational> c(g.dim());
      c[l] = 1;
      return Scalar(g.field(), std::move(c));
    }
  return Scalar(1);
}

// All exponents with 1 <= |k| <= maxdeg, graded.
void for_each_exponent(std::size_t m, int maxdeg, const std::function<void(const Exponent&)>& f) {
  Exponent k(m, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == m) {
      k[i] = left;
      f(k);
      return;
    }
    for (int v = left; v >= 0; --v) {
      k[i] = v;
      rec(i + 1, left - v);
    }
  };
  for (int d = 1; d <= maxdeg; ++d) rec(0, d);
}

}  // namespace

ToricData toric_degree(std::span<const Scalar> gamma) {
  const exact::QMatrix c = coefficient_matrix(gamma);
  const std::size_t m = gamma.size();
  ToricData t;
  // rational basis of the row space, denominators cleared, then Hermite-reduced
  std::vector<std::vector<Rational>> chosen;
  for (std::size_t l = 0; l < c.rows(); ++l) {
    std::vector<Rational> row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = c(l, j);
    exact::QMatrix test(chosen.size() + 1, m);
    for (std::size_t i = 0; i < chosen.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) test(i, j) = chosen[i][j];
    for (std::size_t j = 0; j < m; ++j) test(chosen.size(), j) = row[j];
    if (exact::rank(test) == chosen.size() + 1) chosen.push_back(row);
  }
  std::vector<exact::ZRow> rows;
  for (const auto& row : chosen) rows.push_back(exact::primitive(row));
  t.generators = exact::hermite(std::move(rows));
  t.degree = t.generators.size();
  if (t.degree == 0) return t;
  // coefficient row l = sum_i T_li a_i, then lambda_i = sum_l T_li beta_l
  exact::QMatrix zt(m, t.degree);
  for (std::size_t i = 0; i < t.degree; ++i)
    for (std::size_t j = 0; j < m; ++j) zt(j, i) = Rational(t.generators[i][j]);
  t.lambdas.assign(t.degree, Scalar());
  for (std::size_t l = 0; l < c.rows(); ++l) {
    std::vector<Rational> rhs(m), x;
    for (std::size_t j = 0; j < m; ++j) rhs[j] = c(l, j);
    if (!exact::solve(zt, rhs, x)) throw Error(ErrorKind::InvalidArgument, "toric generators do not span gamma");
    const Scalar b = basis_element(gamma, l);
    for (std::size_t i = 0; i < t.degree; ++i) t.lambdas[i] += x[i] * b;
  }
  return t;
}

bool reconstructs(const ToricData& t, std::span<const Scalar> gamma) {
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    Scalar s;
    for (std::size_t i = 0; i < t.degree; ++i) s += Rational(t.generators[i][j]) * t.lambdas[i];
    if (!(s == gamma[j])) return false;
  }
  return true;
}

ResonanceData resonance_lattice(std::span<const Scalar> gamma, int maxdeg) {
  ResonanceData r;
  r.gamma.assign(gamma.begin(), gamma.end());
  r.maxdeg = maxdeg;
  const std::size_t m = gamma.size();
  const exact::QMatrix c = coefficient_matrix(gamma);
  r.kernel = exact::integer_kernel(c);
  r.resonant.resize(m);
  std::vector<Rational> s(c.rows());
  for_each_exponent(m, maxdeg, [&](const Exponent& k) {
    for (std::size_t l = 0; l < c.rows(); ++l) {
      s[l] = 0;
      for (std::size_t i = 0; i < m; ++i) s[l] += k[i] * c(l, i);
    }
    for (std::size_t j = 0; j < m; ++j) {
      bool eq = true;
      for (std::size_t l = 0; l < c.rows() && eq; ++l) eq = s[l] == c(l, j);
      if (eq) r.resonant[j].push_back(k);
    }
  });
  r.toric = toric_degree(gamma);
  return r;
}

}  // namespace liouville
