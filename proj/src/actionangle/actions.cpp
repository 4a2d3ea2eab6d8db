#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <memory>

#include "liouville/actionangle.hpp"
#include "support.hpp"

namespace liouville {

std::string_view to_string(ActionMode mode) {
  switch (mode) {
    case ActionMode::Symplectic: return "symplectic";
    case ActionMode::Presymplectic: return "presymplectic";
    case ActionMode::Poisson: return "poisson";
  }
  return "?";
}

namespace detail {

std::vector<std::vector<double>> torus_points(const TorusChart& chart, std::size_t n_samples) {
  const std::size_t p = chart.p();
  auto n = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(std::max<std::size_t>(n_samples, 1)),
                                                       1.0 / static_cast<double>(p)) - 1e-9));
  n = std::max<std::size_t>(n, 2);
  return torus_grid(chart, n, false).x;
}

Eigen::MatrixXd gradients(const Compiled& c, std::size_t rows, std::size_t m, std::span<const double> x) {
  auto g = c.eval(x);
  Eigen::MatrixXd d(rows, m);
  for (std::size_t j = 0; j < rows; ++j)
    for (std::size_t a = 0; a < m; ++a) d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) = g[j * m + a];
  return d;
}

Compiled gradient_tape(std::span<const Expr> fs, std::size_t m) {
  std::vector<Expr> g;
  for (const auto& f : fs)
    for (std::size_t a = 0; a < m; ++a) g.push_back(diff(f, a));
  return Compiled(g, m);
}

Eigen::MatrixXd matrix_at(const std::vector<double>& rowmajor, std::size_t m) {
  Eigen::MatrixXd w(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = rowmajor[a * m + b];
  return w;
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace detail

using detail::dist;
using detail::gradients;
using detail::torus_points;

double check_primitive(std::span<const Expr> alpha, const Structure2Form& omega,
                       std::span<const std::vector<double>> samples, double tol) {
  const std::size_t m = omega.dim();
  if (alpha.size() != m) throw Error(ErrorKind::InvalidArgument, "1-form has the wrong number of components");
  std::vector<Expr> defect;
  bool exact = true;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      Expr e = canonical(diff(alpha[b], a) - diff(alpha[a], b) - omega(a, b));
      if (!e.is_zero()) exact = false;
      defect.push_back(e);
    }
  if (exact) return 0.0;
  Compiled c(defect, m);
  double worst = 0.0;
  for (const auto& x : samples)
    for (double v : c.eval(x)) worst = std::max(worst, std::fabs(v));
  if (!(worst <= tol)) throw Error(ErrorKind::PrimitiveMismatch, "d alpha differs from omega by " + fmt17(worst));
  return worst;
}

void check_dimension_bound(std::size_t p, const Structure2Form& omega, std::span<const double> seed) {
  const std::size_t m = omega.dim(), r = omega.rank_at(seed);
  if (2 * p > 2 * m - r)
    throw Error(ErrorKind::DimensionBound, "torus dimension " + std::to_string(p) + " exceeds m - rank/2 = " +
                                               std::to_string(m) + " - " + std::to_string(r) + "/2");
}

MineurResult mineur_integral(const TorusChart& chart, std::span<const Expr> alpha, std::size_t k,
                             const Structure2Form& omega) {
  const std::size_t m = chart.m(), p = chart.p();
  if (k >= p) throw Error(ErrorKind::InvalidArgument, "cycle index out of range");
  if (omega.dim() != m) throw Error(ErrorKind::InvalidArgument, "2-form dimension mismatch");
  auto samples = torus_points(chart, 16);
  samples.push_back(chart.seed());
  check_primitive(alpha, omega, samples, chart.flows().tol().primitive);

  Compiled a(alpha, m);
  const Eigen::RowVectorXd lk = chart.lattice().row(static_cast<Eigen::Index>(k));
  auto integrand = [&](const std::vector<double>& x) {
    Eigen::VectorXd z = chart.flows().fields_at(x) * lk.transpose();
    auto av = a.eval(x);
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += av[i] * z(static_cast<Eigen::Index>(i));
    return s;
  };

  using GL = boost::math::quadrature::gauss<double, 16>;
  std::vector<std::pair<double, double>> nodes;
  for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
    nodes.emplace_back(-GL::abscissa()[i], GL::weights()[i]);
    if (GL::abscissa()[i] != 0.0) nodes.emplace_back(GL::abscissa()[i], GL::weights()[i]);
  }
  std::sort(nodes.begin(), nodes.end());

  MineurResult r;
  auto level = [&](std::size_t panels, bool keep) {
    std::vector<double> x = chart.seed();
    double t = 0.0, sum = 0.0;
    std::vector<double> tau(p);
    auto advance = [&](double t1) {
      for (std::size_t i = 0; i < p; ++i) tau[i] = (t1 - t) * lk(static_cast<Eigen::Index>(i));
      x = chart.flows().flow(tau, x);
      t = t1;
    };
    if (keep) r.cycle = {x};
    const double h = 1.0 / static_cast<double>(panels);
    for (std::size_t j = 0; j < panels; ++j) {
      for (const auto& [xi, w] : nodes) {
        advance((static_cast<double>(j) + 0.5 * (1.0 + xi)) * h);
        sum += 0.5 * h * w * integrand(x);
        if (keep) r.cycle.push_back(x);
      }
    }
    advance(1.0);
    if (keep) {
      r.cycle.push_back(x);
      r.closure = dist(x, chart.seed());
    }
    return sum;
  };

  std::size_t panels = 2;
  double prev = level(panels, false);
  for (;;) {
    panels *= 2;
    double cur = level(panels, true);
    r.value = cur;
    r.error = std::fabs(cur - prev);
    if (r.error <= 1e-11 * std::max(1.0, std::fabs(cur)) || panels >= 64) break;
    prev = cur;
  }
  return r;
}

ActionProfile action_profile(const TorusChart& chart, std::span<const Expr> alpha, const Structure2Form& omega,
                             std::string torus_id) {
  check_dimension_bound(chart.p(), omega, chart.seed());
  ActionProfile prof;
  prof.torus_id = std::move(torus_id);
  prof.levels = chart.levels();
  prof.mode = omega.rank_at(chart.seed()) == chart.m() ? ActionMode::Symplectic : ActionMode::Presymplectic;
  for (std::size_t k = 0; k < chart.p(); ++k) {
    auto res = mineur_integral(chart, alpha, k, omega);
    if (res.closure > 1e-7)
      throw Error(ErrorKind::StepFailure, "cycle " + std::to_string(k + 1) + " does not close (gap " +
                                              fmt17(res.closure) + ")");
    prof.mu.push_back(res.value);
    prof.quad_error.push_back(res.error);
    prof.cycles.push_back(std::move(res.cycle));
  }
  return prof;
}

std::string profile_csv(std::span<const ActionProfile> profiles) {
  std::size_t q = 0, p = 0;
  for (const auto& pr : profiles) {
    q = std::max(q, pr.levels.size());
    p = std::max(p, pr.mu.size());
  }
  std::string out = "torus_id,mode";
  for (std::size_t j = 0; j < q; ++j) out += ",F_" + std::to_string(j + 1);
  for (std::size_t k = 0; k < p; ++k) out += ",mu_" + std::to_string(k + 1);
  for (std::size_t k = 0; k < p; ++k) out += ",r_" + std::to_string(k + 1);
  out += "\n";
  for (const auto& pr : profiles) {
    out += pr.torus_id + "," + std::string(to_string(pr.mode));
    for (std::size_t j = 0; j < q; ++j) out += "," + (j < pr.levels.size() ? fmt17(pr.levels[j]) : "");
    for (std::size_t k = 0; k < p; ++k) out += "," + (k < pr.mu.size() ? fmt17(pr.mu[k]) : "");
    for (std::size_t k = 0; k < p; ++k) out += "," + (k < pr.residuals.size() ? fmt17(pr.residuals[k]) : "");
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leafwise integration of rho_k = sum_i L_ki dH_i.

namespace {

class PathIntegrator {
 public:
  PathIntegrator(const TorusChart& ref, std::span<const Expr> hams)
      : ref_(ref), sec_(ref.integrals(), ref.seed()), dh_(detail::gradient_tape(hams, ref.m())), p_(hams.size()) {
    if (hams.size() != ref.p()) throw Error(ErrorKind::InvalidArgument, "need one Hamiltonian per field");
    if (ref.integrals().empty()) throw Error(ErrorKind::InvalidArgument, "chart carries no first integrals");
  }

  std::size_t q() const { return sec_.q(); }

  // Integral along the straight leg za -> zb; `l` is continued along the way.
  Eigen::VectorXd leg(const std::vector<double>& za, const std::vector<double>& zb, Eigen::MatrixXd& l,
                      std::size_t panels) const {
    using GL = boost::math::quadrature::gauss<double, 8>;
    std::vector<std::pair<double, double>> nodes;
    for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
      nodes.emplace_back(-GL::abscissa()[i], GL::weights()[i]);
      nodes.emplace_back(GL::abscissa()[i], GL::weights()[i]);
    }
    std::sort(nodes.begin(), nodes.end());
    const std::size_t q = za.size(), m = ref_.m();
    Eigen::VectorXd delta(q);
    for (std::size_t j = 0; j < q; ++j) delta(static_cast<Eigen::Index>(j)) = zb[j] - za[j];
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_));
    if (delta.norm() == 0.0) return acc;
    const double h = 1.0 / static_cast<double>(panels);
    std::vector<double> z(q);
    for (std::size_t pn = 0; pn < panels; ++pn)
      for (const auto& [xi, w] : nodes) {
        const double s = (static_cast<double>(pn) + 0.5 * (1.0 + xi)) * h;
        for (std::size_t j = 0; j < q; ++j) z[j] = za[j] + s * delta(static_cast<Eigen::Index>(j));
        auto y = sec_.at(z);
        Eigen::VectorXd dy = sec_.tangent(z) * delta;
        l = align_lattice(find_period_lattice(ref_.flows(), y), l);
        Eigen::VectorXd dh = gradients(dh_, p_, m, y) * dy;
        acc += 0.5 * h * w * (l * dh);
      }
    l = align_lattice(find_period_lattice(ref_.flows(), sec_.at(zb)), l);
    return acc;
  }

  const TorusChart& ref() const { return ref_; }

 private:
  const TorusChart& ref_;
  Section sec_;
  Compiled dh_;
  std::size_t p_;
};

}  // namespace

LeafwiseResult leafwise_action(const TorusChart& reference, std::span<const Expr> hamiltonians,
                               std::span<const double> levels, const LeafwiseOptions& opt) {
  PathIntegrator pi(reference, hamiltonians);
  const std::size_t q = pi.q();
  if (levels.size() != q) throw Error(ErrorKind::InvalidArgument, "level vector has the wrong length");
  const std::vector<double> z0 = reference.levels(), z1(levels.begin(), levels.end());

  LeafwiseResult r;
  r.lattice = reference.lattice();
  Eigen::VectorXd mu = pi.leg(z0, z1, r.lattice, opt.panels);
  r.mu.assign(mu.data(), mu.data() + mu.size());

  std::size_t moved = 0;
  for (std::size_t j = 0; j < q; ++j) moved += z0[j] != z1[j];
  if (opt.check_paths && moved >= 2) {
    std::vector<double> corner = z0;
    corner[0] = z1[0];
    Eigen::MatrixXd l2 = reference.lattice();
    Eigen::VectorXd alt = pi.leg(z0, corner, l2, opt.panels);
    alt += pi.leg(corner, z1, l2, opt.panels);
    r.path_discrepancy = (alt - mu).cwiseAbs().maxCoeff();
    if ((l2 - r.lattice).cwiseAbs().maxCoeff() > 1e-6 * (1.0 + r.lattice.cwiseAbs().maxCoeff()))
      throw Error(ErrorKind::PathInconsistency, "lattice bases continued along two paths differ");
    if (r.path_discrepancy > opt.path_tol)
      throw Error(ErrorKind::PathInconsistency,
                  "homotopic paths give actions differing by " + fmt17(r.path_discrepancy));
  }
  return r;
}

std::vector<LeafwiseResult> leafwise_action(const TorusChart& reference, std::span<const TorusChart> family,
                                            std::span<const Expr> hamiltonians, const LeafwiseOptions& opt) {
  std::vector<LeafwiseResult> out;
  out.reserve(family.size());
  for (const auto& c : family) out.push_back(leafwise_action(reference, hamiltonians, c.levels(), opt));
  return out;
}

ActionMap leafwise_map(const TorusChart& reference, std::vector<Expr> hamiltonians) {
  auto ref = std::make_shared<const TorusChart>(reference);
  auto hams = std::make_shared<const std::vector<Expr>>(std::move(hamiltonians));
  return [ref, hams](std::span<const double> levels) {
    LeafwiseOptions opt;
    opt.check_paths = false;
    return leafwise_action(*ref, *hams, levels, opt).mu;
  };
}

ActionMap mineur_map(const TorusChart& reference, std::vector<Expr> alpha, Structure2Form omega) {
  auto ref = std::make_shared<const TorusChart>(reference);
  auto sec = std::make_shared<const Section>(reference.integrals(), reference.seed());
  auto a = std::make_shared<const std::vector<Expr>>(std::move(alpha));
  auto w = std::make_shared<const Structure2Form>(std::move(omega));
  return [ref, sec, a, w](std::span<const double> levels) {
    auto y = sec->at(levels);
    Eigen::MatrixXd l = align_lattice(find_period_lattice(ref->flows(), y), ref->lattice());
    TorusChart c(ref->flows_ptr(), y, l, ref->integrals());
    std::vector<double> mu;
    for (std::size_t k = 0; k < c.p(); ++k) mu.push_back(mineur_action(c, *a, k, *w));
    return mu;
  };
}

// ---------------------------------------------------------------------------

namespace {

// Residual of Z_k against the Hamiltonian field of mu_k, given dmu (p x m) at x.
void accumulate_residual(const TorusChart& chart, const Structure& s, const std::vector<double>& x,
                         const Eigen::MatrixXd& dmu, std::vector<double>& r) {
  const std::size_t m = chart.m(), p = chart.p();
  Eigen::MatrixXd z = chart.generators_at(x);
  if (const auto* w = std::get_if<Structure2Form>(&s)) {
    Eigen::MatrixXd wm = detail::matrix_at(w->at(x), m);
    Eigen::MatrixXd zw = z.transpose() * wm;   // row k: (Z_k _| omega)_b
    for (std::size_t k = 0; k < p; ++k)
      r[k] = std::max(r[k], (zw.row(static_cast<Eigen::Index>(k)) + dmu.row(static_cast<Eigen::Index>(k)))
                                .cwiseAbs()
                                .maxCoeff());
  } else {
    const auto& pi = std::get<PoissonBivector>(s);
    Eigen::MatrixXd pm = detail::matrix_at(pi.at(x), m);
    Eigen::MatrixXd xmu = dmu * pm;   // row k: X_{mu_k}^a = sum_b d_b mu Pi^{ba}
    for (std::size_t k = 0; k < p; ++k)
      r[k] = std::max(r[k], (z.col(static_cast<Eigen::Index>(k)).transpose() - xmu.row(static_cast<Eigen::Index>(k)))
                                .cwiseAbs()
                                .maxCoeff());
  }
}

ActionResidual finish(std::vector<double> r) {
  ActionResidual out;
  out.residual = std::move(r);
  out.pass = std::all_of(out.residual.begin(), out.residual.end(), [&](double v) { return v <= out.tol; });
  return out;
}

}  // namespace

ActionResidual verify_action(const TorusChart& chart, std::span<const Expr> mu, const Structure& s,
                             std::size_t n_samples) {
  const std::size_t m = chart.m(), p = chart.p();
  if (mu.size() != p) throw Error(ErrorKind::InvalidArgument, "need one action per generator");
  Compiled dmu = detail::gradient_tape(mu, m);
  std::vector<double> r(p, 0.0);
  for (const auto& x : torus_points(chart, n_samples)) accumulate_residual(chart, s, x, gradients(dmu, p, m, x), r);
  return finish(std::move(r));
}

ActionResidual verify_action(const TorusChart& chart, const ActionMap& mu, const Structure& s,
                             std::size_t n_samples) {
  const std::size_t m = chart.m(), p = chart.p(), q = chart.integrals().size();
  if (q == 0) throw Error(ErrorKind::InvalidArgument, "chart carries no first integrals");
  auto h = level_steps(chart);
  const auto& z0 = chart.levels();
  Eigen::MatrixXd dmudz(p, q);
  for (std::size_t j = 0; j < q; ++j) {
    auto zp = z0, zm = z0;
    zp[j] += h[j];
    zm[j] -= h[j];
    auto up = mu(zp), dn = mu(zm);
    if (up.size() != p || dn.size() != p) throw Error(ErrorKind::InvalidArgument, "action map returned wrong size");
    for (std::size_t k = 0; k < p; ++k)
      dmudz(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = (up[k] - dn[k]) / (2.0 * h[j]);
  }
  Compiled df = detail::gradient_tape(chart.integrals(), m);
  std::vector<double> r(p, 0.0);
  for (const auto& x : torus_points(chart, n_samples))
    accumulate_residual(chart, s, x, dmudz * gradients(df, q, m, x), r);
  return finish(std::move(r));
}

double isotropy_defect(const TorusChart& chart, const Structure& s, std::span<const Expr> hamiltonians,
                       std::size_t n_samples) {
  const std::size_t m = chart.m();
  double worst = 0.0;
  if (const auto* w = std::get_if<Structure2Form>(&s)) {
    for (const auto& x : torus_points(chart, n_samples)) {
      Eigen::MatrixXd f = chart.flows().fields_at(x);
      Eigen::MatrixXd g = f.transpose() * detail::matrix_at(w->at(x), m) * f;
      worst = std::max(worst, g.cwiseAbs().maxCoeff());
    }
    return worst;
  }
  if (hamiltonians.empty()) return 0.0;
  const auto& pi = std::get<PoissonBivector>(s);
  Compiled dh = detail::gradient_tape(hamiltonians, m);
  for (const auto& x : torus_points(chart, n_samples)) {
    Eigen::MatrixXd g = gradients(dh, hamiltonians.size(), m, x);
    Eigen::MatrixXd b = g * detail::matrix_at(pi.at(x), m) * g.transpose();
    worst = std::max(worst, b.cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------

CoaffineChart coaffine_chart(std::vector<CoaffineSample> samples, std::size_t q, double rank_tol) {
  CoaffineChart c;
  c.q = q;
  if (samples.size() < 2) throw Error(ErrorKind::InvalidArgument, "co-affine chart needs at least two tori");
  c.p = samples.front().mu.size();
  for (const auto& s : samples)
    if (s.mu.size() != c.p || s.levels.size() != samples.front().levels.size())
      throw Error(ErrorKind::InvalidArgument, "inconsistent co-affine samples");
  const std::size_t n = samples.size();
  const std::size_t k = std::min(n - 1, std::max<std::size_t>(2 * q, 2));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.emplace_back(dist(samples[i].levels, samples[j].levels), j);
    std::sort(d.begin(), d.end());
    Eigen::MatrixXd diff(c.p, k);
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t a = 0; a < c.p; ++a)
        diff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t)) =
            samples[d[t].second].mu[a] - samples[i].mu[a];
    Eigen::VectorXd sv = diff.jacobiSvd().singularValues();
    std::size_t r = 0;
    const double top = sv.size() ? sv(0) : 0.0;
    for (Eigen::Index t = 0; t < sv.size(); ++t) r += top > 0.0 && sv(t) > rank_tol * top;
    c.local_ranks.push_back(r);
  }
  c.rank = c.local_ranks.front();
  for (std::size_t r : c.local_ranks)
    if (r != c.rank)
      throw Error(ErrorKind::RankUnstable, "action-map rank varies between " + std::to_string(c.rank) + " and " +
                                               std::to_string(r) + " across the family");
  if (c.rank > std::min(c.p, q))
    throw Error(ErrorKind::RankUnstable, "action-map rank " + std::to_string(c.rank) +
                                             " exceeds the declared base dimension " + std::to_string(q));
  c.samples = std::move(samples);
  return c;
}

CoaffineSample coaffine_sample(const TorusChart& chart, std::span<const Expr> alpha, const Structure2Form& omega,
                               std::string torus_id) {
  CoaffineSample s;
  s.torus_id = std::move(torus_id);
  s.levels = chart.levels();
  for (std::size_t k = 0; k < chart.p(); ++k) s.mu.push_back(mineur_action(chart, alpha, k, omega));
  return s;
}

}  // namespace liouville
