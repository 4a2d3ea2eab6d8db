#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "liouville/exact.hpp"
#include "liouville/torusflow.hpp"

namespace liouville {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Gauss-Newton on tau -> flow(tau)(x0) - target; columns of the Jacobian are
// the fields at the end point because the flows commute.
struct Refined {
  Eigen::VectorXd tau;
  double residual = 0.0;
};

Refined refine(const Flows& flows, Eigen::VectorXd tau, std::span<const double> x0, std::span<const double> target,
               int max_iter = 25) {
  const auto m = static_cast<Eigen::Index>(flows.m());
  double res = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> y = flows.flow(std::span<const double>(tau.data(), static_cast<std::size_t>(tau.size())), x0);
    Eigen::VectorXd phi(m);
    for (Eigen::Index a = 0; a < m; ++a) phi(a) = y[static_cast<std::size_t>(a)] - target[static_cast<std::size_t>(a)];
    res = phi.norm();
    if (res <= 1e-13 * (1.0 + norm(target))) break;
    Eigen::MatrixXd j = flows.fields_at(y);
    Eigen::VectorXd d = j.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-phi);
    tau += d;
    if (!tau.allFinite()) return {tau, INFINITY};
    if (d.norm() <= 1e-15 * (1.0 + tau.norm())) {
      y = flows.flow(std::span<const double>(tau.data(), static_cast<std::size_t>(tau.size())), x0);
      res = dist(y, target);
      break;
    }
    if (it == max_iter - 1) {
      y = flows.flow(std::span<const double>(tau.data(), static_cast<std::size_t>(tau.size())), x0);
      res = dist(y, target);
    }
  }
  return {tau, res};
}

double period_estimate(const Flows& flows, std::span<const double> c, std::span<const double> x0) {
  const std::size_t m = flows.m();
  std::vector<double> y(m), jac(m * m);
  flows.combined(c, x0, y);
  flows.combined_jacobian(c, x0, jac);
  double acc = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < m; ++b) s += jac[a * m + b] * y[b];
    acc += s * s;
  }
  acc = std::sqrt(acc);
  double v = norm(y);
  if (v == 0.0) throw Error(ErrorKind::DegenerateSeed, "search direction vanishes at the seed");
  if (acc <= 1e-12 * v) return INFINITY;
  return 2.0 * std::numbers::pi * v / acc;
}

// Walks the trajectory of sum c_i X_i and hands every local minimum of the
// distance to x0 that is small compared to the largest excursion so far to
// Gauss-Newton in the full joint-time space.
void search_direction(const Flows& flows, std::span<const double> c, std::span<const double> x0,
                      std::size_t wanted, std::vector<Eigen::VectorXd>& found) {
  const Tolerances& tol = flows.tol();
  const std::size_t m = flows.m(), p = flows.p();
  double t_est = period_estimate(flows, c, x0);
  double horizon = std::isfinite(t_est) ? std::min(tol.horizon * t_est, tol.max_time) : tol.max_time;
  std::vector<double> cc(c.begin(), c.end());
  auto f = [&](const State& s, State& ds) { flows.combined(cc, s, ds); };
  auto g_of = [&](const State& s) {
    State d(m);
    flows.combined(cc, s, d);
    double g = 0.0;
    for (std::size_t a = 0; a < m; ++a) g += (s[a] - x0[a]) * d[a];
    return g;
  };
  auto ctrl = odeint::make_controlled(tol.ode_abs, tol.ode_rel, odeint::runge_kutta_fehlberg78<State>());
  auto sys = [&](const State& s, State& ds, double) { f(s, ds); };
  auto jump = [&](State s, double dt) {
    // accurate sub-step from a stored state
    double t = 0.0, h = dt / 4.0;
    while (t < dt) {
      double use = std::min(h, dt - t);
      double u = use;
      auto r = ctrl.try_step(sys, s, t, u);
      if (r == odeint::success)
        h = std::max(u, use);
      else
        h = u;
    }
    return s;
  };
  State x(x0.begin(), x0.end());
  double t = 0.0, dt = std::isfinite(t_est) ? t_est / 32.0 : 1e-2;
  double dmax = 0.0, g_prev = 0.0;
  std::size_t attempts = 0, steps = 0;
  const std::size_t got0 = found.size();
  while (t < horizon && found.size() - got0 < wanted && attempts < 80) {
    State xp = x;
    const double tp = t;
    auto r = ctrl.try_step(sys, x, t, dt);
    if (r != odeint::success) {
      if (dt < 1e-14 * std::max(1.0, t)) throw Error(ErrorKind::StepFailure, "step size collapsed in return search");
      continue;
    }
    if (++steps > 2'000'000) throw Error(ErrorKind::StepFailure, "step budget exhausted in return search");
    for (std::size_t a = 0; a < m; ++a)
      if (!std::isfinite(x[a]) || std::fabs(x[a]) > tol.box)
        throw Error(ErrorKind::DomainExit, "trajectory left the box during the return search");
    double d = dist(x, x0);
    dmax = std::max(dmax, d);
    double g = g_of(x);
    if (g_prev < 0.0 && g >= 0.0) {
      // regula falsi (Illinois) on g over [tp, t]
      double a = 0.0, b = t - tp, ga = g_prev, gb = g;
      State xb = x;
      for (int it = 0; it < 30 && b - a > 1e-13 * (1.0 + t); ++it) {
        double s = b - gb * (b - a) / (gb - ga);
        if (!(s > a && s < b)) s = 0.5 * (a + b);
        State xs = jump(xp, s);
        double gs = g_of(xs);
        if (gs < 0.0) {
          a = s;
          ga = gs;
          gb *= 0.5;
        } else {
          b = s;
          gb = gs;
          xb = xs;
          ga *= 0.5;
        }
      }
      double tmin = tp + b;
      double dmin = dist(xb, x0);
      if (dmin < 0.3 * dmax) {
        ++attempts;
        Eigen::VectorXd tau(static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < p; ++i) tau(static_cast<Eigen::Index>(i)) = tmin * c[i];
        Refined rf = refine(flows, tau, x0, x0);
        if (rf.residual <= tol.ret && rf.tau.norm() > 1e-6 * std::max(1.0, std::isfinite(t_est) ? t_est : 1.0))
          found.push_back(rf.tau);
      }
    }
    g_prev = g;
  }
}

bool rationalize(double x, long max_den, double tol, long& num, long& den) {
  // continued fraction convergents
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 40; ++it) {
    double a = std::floor(r);
    long ai = static_cast<long>(a);
    long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::fabs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol) {
      num = h1;
      den = k1;
      return true;
    }
    double frac = r - a;
    if (frac < 1e-300) break;
    r = 1.0 / frac;
  }
  return false;
}

Eigen::MatrixXd independent_basis(std::vector<Eigen::VectorXd> cands, std::size_t p) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.norm() < b.norm(); });
  Eigen::MatrixXd b(0, static_cast<Eigen::Index>(p));
  for (const auto& v : cands) {
    Eigen::MatrixXd t(b.rows() + 1, b.cols());
    t << b, v.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) > 1e-6 * s(0)) b = t;
    if (static_cast<std::size_t>(b.rows()) == p) break;
  }
  return b;
}

// Lattice generated by the candidates: coordinates in a provisional basis are
// rationalized, and the integer Hermite form of the rescaled coordinate rows
// gives a basis of the whole set.
Eigen::MatrixXd close_lattice(const std::vector<Eigen::VectorXd>& cands, std::size_t p) {
  Eigen::MatrixXd b = independent_basis(cands, p);
  if (static_cast<std::size_t>(b.rows()) < p)
    throw Error(ErrorKind::NoReturnFound, "found " + std::to_string(b.rows()) + " independent return vectors of " +
                                              std::to_string(p) + " within the search horizon");
  Eigen::MatrixXd binv = b.inverse();
  std::vector<std::vector<exact::Q>> rows;
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<exact::Q> r(p, exact::Q(0));
    r[i] = 1;
    rows.push_back(r);
  }
  for (const auto& v : cands) {
    Eigen::RowVectorXd w = v.transpose() * binv;
    std::vector<exact::Q> r(p);
    bool ok = true;
    for (std::size_t i = 0; i < p && ok; ++i) {
      long n = 0, d = 1;
      ok = rationalize(w(static_cast<Eigen::Index>(i)), 64, 1e-6, n, d);
      r[i] = exact::Q(n, d);
      r[i].canonicalize();
    }
    if (ok) rows.push_back(r);
  }
  exact::Z lcm = 1;
  for (const auto& r : rows)
    for (const auto& q : r) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), q.get_den_mpz_t());
  std::vector<exact::ZRow> zr;
  for (const auto& r : rows) {
    exact::ZRow z(p);
    for (std::size_t i = 0; i < p; ++i) {
      exact::Q s = r[i] * lcm;
      z[i] = s.get_num();
    }
    zr.push_back(z);
  }
  auto h = exact::hermite(zr);
  Eigen::MatrixXd coeff(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = exact::Q(h[i][j], lcm).get_d();
  return coeff * b;
}

}  // namespace

Eigen::MatrixXd reduce_lattice(Eigen::MatrixXd b) {
  const Eigen::Index p = b.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) {
        if (i == j) continue;
        double bj = b.row(j).squaredNorm();
        double k = std::round(b.row(i).dot(b.row(j)) / bj);
        if (k == 0.0) continue;
        Eigen::RowVectorXd c = b.row(i) - k * b.row(j);
        if (c.squaredNorm() < b.row(i).squaredNorm() * (1.0 - 1e-12)) {
          b.row(i) = c;
          changed = true;
        }
      }
    if (!changed) break;
  }
  const double scale = b.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      if (std::fabs(b(i, j)) > 1e-9 * scale) {
        if (b(i, j) < 0) b.row(i) *= -1.0;
        break;
      }
    }
  }
  // order: by length, ties (within 1e-9) by components
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) {
    double nx = b.row(x).norm(), ny = b.row(y).norm();
    if (std::fabs(nx - ny) > 1e-9 * scale) return nx < ny;
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      if (std::fabs(b(x, j) - b(y, j)) > 1e-9 * scale) return b(x, j) > b(y, j);
    return false;
  });
  Eigen::MatrixXd out(b.rows(), b.cols());
  for (Eigen::Index i = 0; i < p; ++i) out.row(i) = b.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

std::optional<Eigen::MatrixXi> unimodular_between(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  Eigen::MatrixXd u = b * a.inverse();
  Eigen::MatrixXi ui = u.array().round().cast<int>();
  if ((u - ui.cast<double>()).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  double d = ui.cast<double>().determinant();
  if (std::fabs(std::fabs(d) - 1.0) > 1e-9) return std::nullopt;
  return ui;
}

Eigen::MatrixXd align_lattice(const Eigen::MatrixXd& lattice, const Eigen::MatrixXd& reference) {
  Eigen::MatrixXd k = reference * lattice.inverse();
  Eigen::MatrixXd u = k.array().round();
  if (std::fabs(std::fabs(u.determinant()) - 1.0) > 1e-9)
    throw Error(ErrorKind::PathInconsistency, "neighbouring period lattices cannot be matched continuously");
  return u * lattice;
}

Eigen::MatrixXd find_period_lattice(const Flows& flows, std::span<const double> x0) {
  const std::size_t p = flows.p();
  std::vector<Eigen::VectorXd> found;
  std::vector<double> c(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    std::fill(c.begin(), c.end(), 0.0);
    c[i] = 1.0;
    search_direction(flows, c, x0, 1, found);
  }
  if (static_cast<std::size_t>(independent_basis(found, p).rows()) < p) {
    // generic direction: powers of the plastic number, no rational relations
    double r = 1.0;
    for (std::size_t i = 0; i < p; ++i) {
      c[i] = r;
      r *= 0.7548776662466927;
    }
    search_direction(flows, c, x0, 2 * p + 2, found);
  }
  Eigen::MatrixXd l = reduce_lattice(close_lattice(found, p));
  // index check: a return at a fraction of the current basis means the
  // candidates only spanned a sublattice
  std::vector<int> ks = p <= 2 ? std::vector<int>{2, 3, 5} : (p == 3 ? std::vector<int>{2, 3} : std::vector<int>{2});
  for (int pass = 0; pass < 3; ++pass) {
    bool grew = false;
    for (int k : ks) {
      std::size_t total = 1;
      for (std::size_t i = 0; i < p; ++i) total *= static_cast<std::size_t>(k);
      std::vector<Eigen::VectorXd> taus;
      std::vector<double> dists;
      for (std::size_t code = 1; code < total; ++code) {
        Eigen::RowVectorXd j(static_cast<Eigen::Index>(p));
        std::size_t cc = code;
        for (std::size_t i = 0; i < p; ++i) {
          j(static_cast<Eigen::Index>(i)) = static_cast<double>(cc % static_cast<std::size_t>(k)) / k;
          cc /= static_cast<std::size_t>(k);
        }
        Eigen::VectorXd tau = (j * l).transpose();
        taus.push_back(tau);
        dists.push_back(dist(flows.flow(std::span<const double>(tau.data(), p), x0), x0));
      }
      double spread = *std::max_element(dists.begin(), dists.end());
      for (Eigen::Index r = 0; r < l.rows(); ++r) {
        Eigen::VectorXd tau = 0.37 * l.row(r).transpose();
        spread = std::max(spread, dist(flows.flow(std::span<const double>(tau.data(), p), x0), x0));
      }
      for (std::size_t t = 0; t < taus.size() && !grew; ++t) {
        // only points already close to the seed can be returns
        if (dists[t] > 0.2 * spread) continue;
        Refined rf = refine(flows, taus[t], x0, x0);
        if (rf.residual > flows.tol().ret) continue;
        Eigen::RowVectorXd w = rf.tau.transpose() * l.inverse();
        if ((w.array() - w.array().round()).abs().maxCoeff() < 1e-6) continue;
        found.push_back(rf.tau);
        grew = true;
      }
      if (grew) break;
    }
    if (!grew) break;
    l = reduce_lattice(close_lattice(found, p));
  }
  return l;
}

Eigen::MatrixXd find_period_lattice(const SystemSpec& spec, std::span<const double> x0) {
  Flows flows(spec);
  return find_period_lattice(flows, x0);
}

}  // namespace liouville
