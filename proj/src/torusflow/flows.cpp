#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstdio>

#include "liouville/torusflow.hpp"

namespace liouville {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

// Controlled RKF7(8) on [0, T], T > 0, with explicit failure detection.
template <class F>
void advance(F&& f, State& x, double T, const Tolerances& tol, std::size_t box_dims) {
  if (T == 0.0) return;
  auto ctrl = odeint::make_controlled(tol.ode_abs, tol.ode_rel, odeint::runge_kutta_fehlberg78<State>());
  auto sys = [&](const State& s, State& ds, double) { f(s, ds); };
  double t = 0.0;
  double dt = T / 16.0;
  std::size_t steps = 0;
  const std::size_t max_steps = 5'000'000;
  try {
    while (t < T) {
      const bool clipped = t + dt >= T;
      double use = clipped ? T - t : dt;
      const double before = use;
      auto r = ctrl.try_step(sys, x, t, use);
      if (r == odeint::success) {
        ++steps;
        for (std::size_t a = 0; a < box_dims; ++a) {
          if (!std::isfinite(x[a])) throw Error(ErrorKind::StepFailure, "non-finite state at t = " + std::to_string(t));
          if (std::fabs(x[a]) > tol.box)
            throw Error(ErrorKind::DomainExit, "trajectory left the box |x| <= " + std::to_string(tol.box) +
                                                   " at t = " + std::to_string(t));
        }
        if (clipped) {
          t = T;
          break;
        }
        dt = std::max(use, before);
      } else {
        dt = use;
        if (dt < 1e-15 * std::max(1.0, T))
          throw Error(ErrorKind::StepFailure, "step size collapsed at t = " + std::to_string(t));
      }
      if (steps > max_steps) throw Error(ErrorKind::StepFailure, "step budget exhausted at t = " + std::to_string(t));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Domain) throw Error(ErrorKind::DomainExit, e.what());
    throw;
  }
}

}  // namespace

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Flows::Flows(const SystemSpec& spec, bool jacobians) : Flows(spec.fields, spec.tol, jacobians) {}

Flows::Flows(const std::vector<VectorFieldExpr>& fields, const Tolerances& tol, bool jacobians)
    : p_(fields.size()), tol_(tol), has_jac_(jacobians) {
  if (fields.empty()) throw Error(ErrorKind::InvalidArgument, "no vector fields");
  m_ = fields[0].dim();
  std::vector<Expr> comp, jac;
  for (const auto& x : fields) {
    if (x.dim() != m_) throw Error(ErrorKind::InvalidArgument, "vector field dimension mismatch");
    for (const auto& c : x.comp) comp.push_back(c);
    if (jacobians)
      for (const auto& c : x.comp)
        for (std::size_t b = 0; b < m_; ++b) jac.push_back(diff(c, b));
  }
  fields_ = Compiled(comp, m_);
  if (jacobians) jac_ = Compiled(jac, m_);
}

Eigen::MatrixXd Flows::fields_at(std::span<const double> x) const {
  thread_local std::vector<double> buf;
  buf.resize(m_ * p_);
  fields_.eval(x, buf);
  Eigen::MatrixXd f(m_, p_);
  for (std::size_t i = 0; i < p_; ++i)
    for (std::size_t a = 0; a < m_; ++a) f(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = buf[i * m_ + a];
  return f;
}

void Flows::combined(std::span<const double> c, std::span<const double> x, std::span<double> dx) const {
  thread_local std::vector<double> buf;
  buf.resize(m_ * p_);
  fields_.eval(x.subspan(0, m_), buf);
  for (std::size_t a = 0; a < m_; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < p_; ++i) s += c[i] * buf[i * m_ + a];
    dx[a] = s;
  }
}

void Flows::combined_jacobian(std::span<const double> c, std::span<const double> x, std::span<double> jac) const {
  if (!has_jac_) throw Error(ErrorKind::InvalidArgument, "flows compiled without Jacobians");
  thread_local std::vector<double> buf;
  buf.resize(m_ * m_ * p_);
  jac_.eval(x.subspan(0, m_), buf);
  for (std::size_t k = 0; k < m_ * m_; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < p_; ++i) s += c[i] * buf[i * m_ * m_ + k];
    jac[k] = s;
  }
}

std::vector<double> Flows::flow(std::span<const double> tau, std::span<const double> x0) const {
  State x(x0.begin(), x0.end());
  std::vector<double> c(tau.begin(), tau.end());
  advance([&](const State& s, State& ds) { combined(c, s, ds); }, x, 1.0, tol_, m_);
  return x;
}

std::vector<double> Flows::flow_variational(std::span<const double> tau, std::span<const double> x0,
                                            std::vector<double>& jac) const {
  const std::size_t m = m_;
  State x(m + m * m, 0.0);
  std::copy(x0.begin(), x0.end(), x.begin());
  for (std::size_t a = 0; a < m; ++a) x[m + a * m + a] = 1.0;
  std::vector<double> c(tau.begin(), tau.end());
  std::vector<double> dz(m * m);
  advance(
      [&](const State& s, State& ds) {
        combined(c, std::span<const double>(s.data(), m), std::span<double>(ds.data(), m));
        combined_jacobian(c, std::span<const double>(s.data(), m), dz);
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b) {
            double v = 0.0;
            for (std::size_t k = 0; k < m; ++k) v += dz[a * m + k] * s[m + k * m + b];
            ds[m + a * m + b] = v;
          }
      },
      x, 1.0, tol_, m);
  jac.assign(x.begin() + static_cast<std::ptrdiff_t>(m), x.end());
  x.resize(m);
  return x;
}

std::vector<double> Flows::flow_composed(std::span<const double> tau, std::span<const double> x0,
                                         std::span<const std::size_t> order) const {
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> c(p_, 0.0);
  for (std::size_t i : order) {
    std::fill(c.begin(), c.end(), 0.0);
    c[i] = tau[i];
    x = flow(c, x);
  }
  return x;
}

std::vector<double> integrate_flow(const VectorFieldExpr& x, std::span<const double> x0, double t,
                                   const Tolerances& tol) {
  if (x0.size() != x.dim()) throw Error(ErrorKind::InvalidArgument, "seed dimension mismatch");
  Compiled f = x.compile();
  State s(x0.begin(), x0.end());
  const double sign = t < 0 ? -1.0 : 1.0;
  advance(
      [&](const State& y, State& dy) {
        f.eval(y, dy);
        if (sign < 0)
          for (double& v : dy) v = -v;
      },
      s, std::fabs(t), tol, x.dim());
  return s;
}

// ---------------------------------------------------------------------------

void validate(const SystemSpec& spec) {
  const std::size_t m = spec.m();
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "no coordinates");
  if (spec.p() == 0) throw Error(ErrorKind::InvalidArgument, "no vector fields");
  for (const auto& x : spec.fields)
    if (x.dim() != m) throw Error(ErrorKind::InvalidArgument, "vector field dimension differs from coordinate count");
  if (spec.q() > 0 && spec.p() + spec.q() != m)
    throw Error(ErrorKind::InvalidArgument, "type (p, q) = (" + std::to_string(spec.p()) + ", " +
                                                std::to_string(spec.q()) + ") does not satisfy p + q = m = " +
                                                std::to_string(m));
  if (!spec.hamiltonians.empty() && spec.hamiltonians.size() != spec.p())
    throw Error(ErrorKind::InvalidArgument, "need one Hamiltonian per vector field");
  if (spec.omega && spec.omega->dim() != m) throw Error(ErrorKind::InvalidArgument, "2-form dimension mismatch");
  if (spec.poisson && spec.poisson->dim() != m) throw Error(ErrorKind::InvalidArgument, "bivector dimension mismatch");
}

namespace {

double min_rel_sv(const Eigen::MatrixXd& a, double* largest) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (largest) *largest = s(0);
  return s(0) == 0.0 ? 0.0 : s(s.size() - 1) / s(0);
}

}  // namespace

SystemCheck check_system(const SystemSpec& spec, std::span<const double> seed,
                         std::span<const std::vector<double>> samples) {
  validate(spec);
  const std::size_t m = spec.m();
  SystemCheck out;
  std::vector<Expr> comm, inv;
  for (std::size_t i = 0; i < spec.p(); ++i)
    for (std::size_t j = i + 1; j < spec.p(); ++j)
      for (const auto& c : commutator(spec.fields[i], spec.fields[j]).comp) comm.push_back(c);
  for (const auto& x : spec.fields)
    for (const auto& f : spec.integrals) inv.push_back(x.apply(f));
  Compiled kc(comm, m), ki(inv, m);
  for (const auto& x : samples) {
    for (double v : kc.eval(x)) out.commute = std::max(out.commute, std::fabs(v));
    for (double v : ki.eval(x)) out.firstint = std::max(out.firstint, std::fabs(v));
  }
  if (out.commute > spec.tol.commute)
    throw Error(ErrorKind::HypothesisViolated, "vector fields do not commute: max |[X_i, X_j]| = " + fmt17(out.commute));
  if (out.firstint > spec.tol.firstint)
    throw Error(ErrorKind::HypothesisViolated, "first integrals not preserved: max |X_i(F_j)| = " + fmt17(out.firstint));
  Flows flows(spec, false);
  double big = 0.0;
  out.min_sv_fields = min_rel_sv(flows.fields_at(seed), &big);
  if (big == 0.0 || out.min_sv_fields < spec.tol.rank)
    throw Error(ErrorKind::DegenerateSeed, "X_1 ^ ... ^ X_p vanishes at the seed");
  if (spec.q() > 0) {
    Section sec(spec.integrals, seed);
    out.min_sv_integrals = min_rel_sv(sec.gradient(seed), &big);
    if (big == 0.0 || out.min_sv_integrals < spec.tol.rank)
      throw Error(ErrorKind::DegenerateSeed, "dF_1 ^ ... ^ dF_q vanishes at the seed");
  }
  return out;
}

// ---------------------------------------------------------------------------

Section::Section(std::vector<Expr> integrals, std::span<const double> x0)
    : integrals_(std::move(integrals)), x0_(x0.begin(), x0.end()) {
  const std::size_t m = x0_.size();
  std::vector<Expr> grads;
  for (const auto& f : integrals_)
    for (std::size_t a = 0; a < m; ++a) grads.push_back(diff(f, a));
  f_ = Compiled(integrals_, m);
  df_ = Compiled(grads, m);
  z0_ = f_.eval(x0_);
  if (!integrals_.empty()) p_ = gradient(x0_).completeOrthogonalDecomposition().pseudoInverse();
}

Eigen::MatrixXd Section::gradient(std::span<const double> x) const {
  const std::size_t m = x0_.size(), q = integrals_.size();
  auto g = df_.eval(x);
  Eigen::MatrixXd d(q, m);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t a = 0; a < m; ++a) d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) = g[j * m + a];
  return d;
}

std::vector<double> Section::at(std::span<const double> levels) const {
  const std::size_t m = x0_.size(), q = integrals_.size();
  if (q == 0) return x0_;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  Eigen::Map<const Eigen::VectorXd> z(levels.data(), static_cast<Eigen::Index>(q));
  Eigen::Map<const Eigen::VectorXd> base(x0_.data(), static_cast<Eigen::Index>(m));
  std::vector<double> x(m);
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd xv = base + p_ * w;
    std::copy(xv.data(), xv.data() + m, x.begin());
    auto fv = f_.eval(x);
    Eigen::Map<const Eigen::VectorXd> f(fv.data(), static_cast<Eigen::Index>(q));
    Eigen::VectorXd r = z - f;
    if (r.norm() <= 1e-14 * (1.0 + z.norm())) return x;
    Eigen::MatrixXd jw = gradient(x) * p_;
    Eigen::VectorXd dw = jw.fullPivLu().solve(r);
    w += dw;
    if (dw.norm() <= 1e-15 * (1.0 + w.norm())) {
      xv = base + p_ * w;
      std::copy(xv.data(), xv.data() + m, x.begin());
      return x;
    }
  }
  auto fv = f_.eval(x);
  double err = 0.0;
  for (std::size_t j = 0; j < q; ++j) err = std::max(err, std::fabs(fv[j] - levels[j]));
  if (err > 1e-10 * (1.0 + z.norm()))
    throw Error(ErrorKind::DegenerateSeed, "section does not reach the requested level (residual " + fmt17(err) + ")");
  return x;
}

Eigen::MatrixXd Section::tangent(std::span<const double> levels) const {
  auto x = at(levels);
  return p_ * (gradient(x) * p_).inverse();
}

}  // namespace liouville
