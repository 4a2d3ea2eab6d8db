#include <cmath>
#include <numbers>

#include "liouville/parallel.hpp"
#include "liouville/torusflow.hpp"

namespace liouville {

namespace {

double wrap01(double v) {
  double w = v - std::floor(v);
  if (w >= 1.0 - 1e-12 || w < 1e-13) w = 0.0;
  return w;
}

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m) {
  std::vector<double> c(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      const double v = a[i * m + k];
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) c[i * m + j] += v * b[k * m + j];
    }
  return c;
}

std::size_t coarse_n(std::size_t p) { return p == 1 ? 32 : p == 2 ? 12 : p == 3 ? 6 : 4; }

}  // namespace

TorusChart::TorusChart(std::shared_ptr<const Flows> flows, std::vector<double> x0, Eigen::MatrixXd lattice,
                       std::vector<Expr> integrals)
    : flows_(std::move(flows)), x0_(std::move(x0)), l_(std::move(lattice)), integrals_(std::move(integrals)) {
  if (l_.rows() != l_.cols() || static_cast<std::size_t>(l_.rows()) != flows_->p())
    throw Error(ErrorKind::InvalidArgument, "lattice shape mismatch");
  if (std::fabs(l_.determinant()) <= 1e-12 * std::pow(l_.norm(), static_cast<double>(l_.rows())))
    throw Error(ErrorKind::InvalidArgument, "singular period lattice");
  a_ = l_.inverse();
  if (!integrals_.empty()) levels_ = Compiled(integrals_, x0_.size()).eval(x0_);
  TorusGrid g = torus_grid(*this, coarse_n(p()), false, 1);
  coarse_theta_ = std::move(g.theta);
  coarse_x_ = std::move(g.x);
}

std::vector<double> TorusChart::point(std::span<const double> theta) const {
  Eigen::Map<const Eigen::RowVectorXd> th(theta.data(), static_cast<Eigen::Index>(p()));
  Eigen::RowVectorXd tau = th * l_;
  return flows_->flow(std::span<const double>(tau.data(), p()), x0_);
}

std::vector<double> TorusChart::angles(std::span<const double> x) const {
  std::size_t best = 0;
  double bd = INFINITY;
  for (std::size_t i = 0; i < coarse_x_.size(); ++i) {
    double d = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) d += (coarse_x_[i][a] - x[a]) * (coarse_x_[i][a] - x[a]);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  Eigen::Map<const Eigen::RowVectorXd> th0(coarse_theta_[best].data(), static_cast<Eigen::Index>(p()));
  Eigen::VectorXd tau = (th0 * l_).transpose();
  const auto m = static_cast<Eigen::Index>(x0_.size());
  for (int it = 0; it < 30; ++it) {
    std::vector<double> y = flows_->flow(std::span<const double>(tau.data(), p()), x0_);
    Eigen::VectorXd phi(m);
    for (Eigen::Index a = 0; a < m; ++a) phi(a) = y[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(a)];
    if (phi.norm() <= 1e-14 * (1.0 + Eigen::Map<const Eigen::VectorXd>(x.data(), m).norm())) break;
    Eigen::MatrixXd j = flows_->fields_at(y);
    Eigen::VectorXd d = j.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-phi);
    tau += d;
    if (d.norm() <= 1e-15 * (1.0 + tau.norm())) break;
  }
  Eigen::RowVectorXd th = tau.transpose() * a_;
  std::vector<double> out(p());
  for (std::size_t k = 0; k < p(); ++k) out[k] = wrap01(th(static_cast<Eigen::Index>(k)));
  return out;
}

Eigen::MatrixXd TorusChart::generators_at(std::span<const double> x) const {
  return flows_->fields_at(x) * l_.transpose();
}

TorusChart TorusChart::with_basis(const Eigen::MatrixXi& u) const { return with_lattice(u.cast<double>() * l_); }

TorusChart TorusChart::with_lattice(Eigen::MatrixXd l) const {
  TorusChart c = *this;
  c.l_ = std::move(l);
  c.a_ = c.l_.inverse();
  // coarse angles follow the new basis
  for (std::size_t i = 0; i < c.coarse_theta_.size(); ++i) {
    Eigen::Map<const Eigen::RowVectorXd> th(coarse_theta_[i].data(), static_cast<Eigen::Index>(p()));
    Eigen::RowVectorXd nt = th * l_ * c.a_;
    for (std::size_t k = 0; k < p(); ++k) c.coarse_theta_[i][k] = wrap01(nt(static_cast<Eigen::Index>(k)));
  }
  return c;
}

TorusChart build_chart(std::shared_ptr<const Flows> flows, const std::vector<Expr>& integrals,
                       std::span<const double> x0) {
  Eigen::MatrixXd l = find_period_lattice(*flows, x0);
  return TorusChart(std::move(flows), std::vector<double>(x0.begin(), x0.end()), std::move(l), integrals);
}

TorusChart build_chart(const SystemSpec& spec, std::span<const double> x0) {
  validate(spec);
  if (x0.size() != spec.m()) throw Error(ErrorKind::InvalidArgument, "seed dimension mismatch");
  auto flows = std::make_shared<const Flows>(spec);
  return build_chart(flows, spec.integrals, x0);
}

QuasiPeriodicity verify_quasiperiodicity(const TorusChart& chart, const VectorFieldExpr& x, std::size_t n_samples) {
  const std::size_t p = chart.p(), m = chart.m();
  Compiled fx = x.compile();
  auto row_at = [&](const std::vector<double>& y, double& tangent_res) {
    Eigen::MatrixXd f = chart.flows().fields_at(y);
    auto xv = fx.eval(y);
    Eigen::Map<const Eigen::VectorXd> v(xv.data(), static_cast<Eigen::Index>(m));
    Eigen::VectorXd c = f.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(v);
    tangent_res = (f * c - v).cwiseAbs().maxCoeff();
    return Eigen::RowVectorXd(c.transpose() * chart.frequencies());
  };
  QuasiPeriodicity out;
  double tr = 0.0;
  out.rotation = row_at(chart.seed(), tr);
  out.residual = tr;
  // Kronecker sequence with golden-ratio style increments
  std::vector<double> alpha(p);
  for (std::size_t k = 0; k < p; ++k) alpha[k] = std::fmod(std::sqrt(2.0 + 3.0 * static_cast<double>(k)), 1.0);
  std::vector<double> theta(p);
  for (std::size_t s = 1; s <= n_samples; ++s) {
    for (std::size_t k = 0; k < p; ++k) theta[k] = std::fmod(static_cast<double>(s) * alpha[k], 1.0);
    auto y = chart.point(theta);
    Eigen::RowVectorXd r = row_at(y, tr);
    out.residual = std::max({out.residual, tr, (r - out.rotation).cwiseAbs().maxCoeff()});
  }
  return out;
}

TorusGrid torus_grid(const TorusChart& chart, std::size_t n, bool with_jacobian, std::size_t threads) {
  const std::size_t p = chart.p(), m = chart.m();
  TorusGrid g;
  g.n = n;
  g.p = p;
  g.m = m;
  std::size_t total = 1;
  for (std::size_t k = 0; k < p; ++k) total *= n;
  g.theta.assign(total, std::vector<double>(p));
  g.x.assign(total, {});
  if (with_jacobian) g.jac.assign(total, {});
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t r = f;
    for (std::size_t k = p; k-- > 0;) {
      g.theta[f][k] = static_cast<double>(r % n) / static_cast<double>(n);
      r /= n;
    }
  }
  const Flows& flows = chart.flows();
  std::vector<std::vector<double>> steps(p);
  for (std::size_t k = 0; k < p; ++k) {
    steps[k].resize(p);
    for (std::size_t i = 0; i < p; ++i)
      steps[k][i] = chart.lattice()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) / static_cast<double>(n);
  }
  auto advance = [&](std::size_t from, std::size_t to, std::size_t k) {
    if (with_jacobian) {
      std::vector<double> js;
      g.x[to] = flows.flow_variational(steps[k], g.x[from], js);
      g.jac[to] = matmul(js, g.jac[from], m);
    } else {
      g.x[to] = flows.flow(steps[k], g.x[from]);
    }
  };
  g.x[0] = chart.seed();
  if (with_jacobian) {
    g.jac[0].assign(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) g.jac[0][a * m + a] = 1.0;
  }
  // row starts (last index 0), sequential in lexicographic order
  const std::size_t rows = total / n;
  std::size_t stride = 1;
  std::vector<std::size_t> strides(p);
  for (std::size_t k = p; k-- > 0;) {
    strides[k] = stride;
    stride *= n;
  }
  for (std::size_t r = 1; r < rows; ++r) {
    const std::size_t f = r * n;
    std::size_t d = p;
    for (std::size_t k = p - 1; k-- > 0;)
      if (static_cast<std::size_t>(std::lround(g.theta[f][k] * static_cast<double>(n))) > 0) {
        d = k;
        break;
      }
    advance(f - strides[d], f, d);
  }
  parallel_for(rows, threads, [&](std::size_t r) {
    for (std::size_t i = 1; i < n; ++i) advance(r * n + i - 1, r * n + i, p - 1);
  });
  return g;
}

std::string grid_csv(const TorusGrid& grid, std::span<const std::string> coords) {
  std::string out;
  for (std::size_t k = 0; k < grid.p; ++k) out += (k ? ",theta_" : "theta_") + std::to_string(k + 1);
  for (const auto& c : coords) out += "," + c;
  out += "\n";
  for (std::size_t f = 0; f < grid.x.size(); ++f) {
    for (std::size_t k = 0; k < grid.p; ++k) out += (k ? "," : "") + fmt17(grid.theta[f][k]);
    for (double v : grid.x[f]) out += "," + fmt17(v);
    out += "\n";
  }
  return out;
}

}  // namespace liouville
