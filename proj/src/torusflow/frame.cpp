#include <algorithm>
#include <cmath>

#include "liouville/parallel.hpp"
#include "liouville/torusflow.hpp"

namespace liouville {

namespace {
Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }
}  // namespace

std::vector<double> level_steps(const TorusChart& chart) {
  const std::size_t m = chart.m(), q = chart.integrals().size();
  double radius = 1e-3;
  TorusGrid g = torus_grid(chart, chart.p() == 1 ? 16 : 4, false, 1);
  for (const auto& x : g.x) {
    double d = 0.0;
    for (std::size_t a = 0; a < m; ++a) d += (x[a] - chart.seed()[a]) * (x[a] - chart.seed()[a]);
    radius = std::max(radius, std::sqrt(d));
  }
  Section sec(chart.integrals(), chart.seed());
  Eigen::MatrixXd grad = sec.gradient(chart.seed());
  std::vector<double> h(q);
  for (std::size_t j = 0; j < q; ++j) h[j] = 1e-3 * std::max(grad.row(ix(j)).norm() * radius, 1e-6);
  return h;
}

LiouvilleFrames liouville_frames(const TorusChart& chart, std::size_t n, std::size_t threads) {
  const std::size_t m = chart.m(), p = chart.p(), q = chart.integrals().size();
  if (p + q != m) throw Error(ErrorKind::InvalidArgument, "Liouville frame needs p + q = m");
  LiouvilleFrames fr;
  Section sec(chart.integrals(), chart.seed());
  const auto& z0 = chart.levels();
  const Eigen::MatrixXd tangent = sec.tangent(z0);
  const auto h = level_steps(chart);
  fr.dl.resize(q);
  for (std::size_t j = 0; j < q; ++j) {
    auto zp = z0, zm = z0;
    zp[j] += h[j];
    zm[j] -= h[j];
    Eigen::MatrixXd lp = align_lattice(find_period_lattice(chart.flows(), sec.at(zp)), chart.lattice());
    Eigen::MatrixXd lm = align_lattice(find_period_lattice(chart.flows(), sec.at(zm)), chart.lattice());
    fr.dl[j] = (lp - lm) / (2.0 * h[j]);
  }
  fr.grid = torus_grid(chart, n, true, threads);
  fr.e.resize(fr.grid.x.size());
  parallel_for(fr.grid.x.size(), threads, [&](std::size_t f) {
    Eigen::MatrixXd xf = chart.flows().fields_at(fr.grid.x[f]);
    Eigen::MatrixXd e(m, m);
    e.leftCols(ix(p)) = xf * chart.lattice().transpose();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> jac(fr.grid.jac[f].data(),
                                                                                                 ix(m), ix(m));
    Eigen::Map<const Eigen::VectorXd> th(fr.grid.theta[f].data(), ix(p));
    for (std::size_t j = 0; j < q; ++j) e.col(ix(p + j)) = jac * tangent.col(ix(j)) + xf * (fr.dl[j].transpose() * th);
    fr.e[f] = std::move(e);
  });
  return fr;
}

}  // namespace liouville
