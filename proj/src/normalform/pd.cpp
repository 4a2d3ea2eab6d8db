#include "liouville/normalform.hpp"

namespace liouville {

std::string_view to_string(PdMode mode) { return mode == PdMode::VectorField ? "vectorfield" : "hamiltonian"; }

namespace {

Scalar pairing(std::span<const Scalar> gamma, const Exponent& k) {
  Scalar s;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (k[i]) s += Rational(k[i]) * gamma[i];
  return s;
}

// Eigenvalue of the semisimple part of the homological operator on a monomial.
Scalar divisor(PdMode mode, std::span<const Scalar> gamma, const Exponent& k, std::size_t j) {
  return mode == PdMode::VectorField ? gamma[j] - pairing(gamma, k) : -pairing(gamma, k);
}

VectorSeries degree_part(const VectorSeries& x, int r) {
  VectorSeries out;
  for (const auto& s : x) out.push_back(s.degree_part(r));
  return out;
}

VectorSeries ad(PdMode mode, const VectorSeries& y, const VectorSeries& x, const KMatrix& pi) {
  if (mode == PdMode::VectorField) return lie_bracket(y, x);
  return {poisson_bracket(y[0], x[0], pi)};
}

VectorSeries lie_transform(PdMode mode, const VectorSeries& x, const VectorSeries& y, const KMatrix& pi) {
  VectorSeries out = x, term = x;
  for (long k = 1;; ++k) {
    term = ad(mode, y, term, pi);
    for (auto& s : term) s = Scalar(nullptr, {Rational(1, k)}) * s;
    if (is_zero(term)) break;
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += term[a];
  }
  return out;
}

// D^{-1} on the non-resonant part; resonant terms must not occur.
VectorSeries divide(PdMode mode, const VectorSeries& x, std::span<const Scalar> gamma) {
  VectorSeries out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    FormalSeries s(x[j].nvars(), x[j].truncation());
    for (const auto& [k, c] : x[j].terms()) {
      const Scalar d = divisor(mode, gamma, k, j);
      if (d.is_zero()) throw Error(ErrorKind::InvalidArgument, "nilpotent part does not commute with the semisimple part");
      s.add_term(k, c / d);
    }
    out.push_back(std::move(s));
  }
  return out;
}

VectorSeries linear_field(const KMatrix& m, int truncation) {
  const std::size_t n = m.rows();
  VectorSeries v(n, FormalSeries(n, truncation));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Exponent e(n, 0);
      e[j] = 1;
      v[i].add_term(e, m(i, j));
    }
  return v;
}

}  // namespace

PdResult pd_normalize(const VectorSeries& input, int maxdeg, PdMode mode, const NumberField& field,
                      const KMatrix* structure) {
  if (input.empty()) throw Error(ErrorKind::InvalidArgument, "empty input");
  if (maxdeg < 2) throw Error(ErrorKind::InvalidArgument, "maxdeg must be at least 2");
  const std::size_t m = input[0].nvars();
  PdResult res;
  res.mode = mode;
  res.maxdeg = maxdeg;
  VectorSeries x;
  for (const auto& s : input) {
    if (s.nvars() != m) throw Error(ErrorKind::InvalidArgument, "components with different variable counts");
    x.push_back(s.truncated(maxdeg));
  }

  KMatrix a(m, m), pi;
  if (mode == PdMode::VectorField) {
    if (x.size() != m) throw Error(ErrorKind::InvalidArgument, "vector field needs one component per variable");
    for (std::size_t i = 0; i < m; ++i) {
      if (!x[i].degree_part(0).is_zero()) throw Error(ErrorKind::InvalidArgument, "origin is not an equilibrium");
      for (std::size_t j = 0; j < m; ++j) {
        Exponent e(m, 0);
        e[j] = 1;
        a(i, j) = x[i].coeff(e);
      }
    }
  } else {
    if (x.size() != 1) throw Error(ErrorKind::InvalidArgument, "Hamiltonian mode takes a single series");
    if (structure) {
      pi = *structure;
    } else {
      if (m % 2) throw Error(ErrorKind::InvalidArgument, "canonical structure needs an even number of variables");
      pi = canonical_structure(m / 2);
    }
    if (pi.rows() != m || pi.cols() != m) throw Error(ErrorKind::InvalidArgument, "structure matrix size mismatch");
    if (!x[0].degree_part(1).is_zero()) throw Error(ErrorKind::InvalidArgument, "origin is not a critical point");
    KMatrix hess(m, m);
    const FormalSeries quad = x[0].degree_part(2);
    for (const auto& [k, c] : quad.terms())
      for (std::size_t i = 0; i < m; ++i) {
        if (k[i] == 2) hess(i, i) = Rational(2) * c;
        for (std::size_t j = 0; j < m; ++j)
          if (i != j && k[i] == 1 && k[j] == 1) hess(i, j) = c;
      }
    a = pi.transpose() * hess;   // X^j = sum_b d_b H Pi^{bj}
  }

  res.linear = split_linear(a, field);
  if (mode == PdMode::Hamiltonian)
    for (const auto& g : res.linear.eigenvalues)
      if (g.is_zero()) throw Error(ErrorKind::DegenerateQuadraticPart, "quadratic part has a zero eigenvalue");
  if (res.linear.s.is_diagonal()) {
    res.frame = KMatrix::identity(m);
    for (std::size_t i = 0; i < m; ++i) res.gamma.push_back(res.linear.s(i, i));
  } else {
    res.frame = res.linear.basis;
    res.gamma = res.linear.eigenvalues;
  }
  const KMatrix pinv = inverse(res.frame);
  const KMatrix au = pinv * a * res.frame;
  const KMatrix nu = au - KMatrix::diagonal(res.gamma);
  res.nilpotent = !nu.is_zero();

  if (mode == PdMode::VectorField) {
    VectorSeries sub;
    for (const auto& s : x) sub.push_back(substitute_linear(s, res.frame));
    res.input.assign(m, FormalSeries(m, maxdeg));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (!pinv(i, j).is_zero()) res.input[i] += pinv(i, j) * sub[j];
  } else {
    res.input = {substitute_linear(x[0], res.frame)};
    res.poisson = pinv * pi * pinv.transpose();
  }

  const VectorSeries nfield = linear_field(nu, maxdeg);
  auto t_nil = [&](const VectorSeries& y) -> VectorSeries {
    if (mode == PdMode::VectorField) return lie_bracket(y, nfield);
    return {Scalar(-1) * apply(nfield, y[0])};
  };

  VectorSeries cur = res.input;
  for (int r = mode == PdMode::VectorField ? 2 : 3; r <= maxdeg; ++r) {
    VectorSeries rhs = degree_part(cur, r);
    for (std::size_t j = 0; j < rhs.size(); ++j) {
      FormalSeries nr(m, maxdeg);
      for (const auto& [k, c] : rhs[j].terms())
        if (!divisor(mode, res.gamma, k, j).is_zero()) nr.add_term(k, -c);
      rhs[j] = std::move(nr);
    }
    if (is_zero(rhs)) continue;
    // (T_S + T_N)^{-1} = sum_i (-T_S^{-1} T_N)^i T_S^{-1}; T_N is nilpotent and commutes with T_S
    VectorSeries term = divide(mode, rhs, res.gamma), y = term;
    for (std::size_t it = 0; res.nilpotent; ++it) {
      if (it > static_cast<std::size_t>(maxdeg) * m + 2)
        throw Error(ErrorKind::InvalidArgument, "nilpotent series did not terminate");
      VectorSeries next = t_nil(term);
      if (is_zero(next)) break;
      term = divide(mode, next, res.gamma);
      for (auto& s : term) s = Scalar(-1) * s;
      for (std::size_t a2 = 0; a2 < y.size(); ++a2) y[a2] += term[a2];
    }
    res.log.push_back({r, y});
    cur = lie_transform(mode, cur, y, res.poisson);
  }
  res.normalized = std::move(cur);
  res.resonance = resonance_lattice(res.gamma, maxdeg);
  return res;
}

VectorSeries replay(const VectorSeries& input_u, std::span<const PdStep> log, PdMode mode, const KMatrix& poisson) {
  VectorSeries cur = input_u;
  for (const auto& step : log) cur = lie_transform(mode, cur, step.generator, poisson);
  return cur;
}

VectorSeries semisimple_defect(const PdResult& r) {
  const std::size_t m = r.gamma.size();
  if (r.mode == PdMode::VectorField)
    return lie_bracket(r.normalized, linear_field(KMatrix::diagonal(r.gamma), r.maxdeg));
  FormalSeries d(m, r.maxdeg);
  for (const auto& [k, c] : r.normalized[0].terms()) d.add_term(k, pairing(r.gamma, k) * c);
  return {d};
}

FormalSeries to_input_coordinates(const FormalSeries& f, const KMatrix& frame) {
  return substitute_linear(f, inverse(frame));
}

}  // namespace liouville
