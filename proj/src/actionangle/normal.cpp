#include <algorithm>
#include <cmath>

#include "liouville/actionangle.hpp"
#include "liouville/parallel.hpp"
#include "support.hpp"

namespace liouville {

std::string_view to_string(NormalMode mode) {
  switch (mode) {
    case NormalMode::General2Form: return "general-2form";
    case NormalMode::AlmostSymplectic: return "almost-symplectic";
    case NormalMode::Symplectic: return "symplectic";
    case NormalMode::Superintegrable: return "superintegrable";
    case NormalMode::Poisson: return "poisson";
  }
  return "?";
}

NormalMode parse_normal_mode(std::string_view s) {
  for (auto m : {NormalMode::General2Form, NormalMode::AlmostSymplectic, NormalMode::Symplectic,
                 NormalMode::Superintegrable, NormalMode::Poisson})
    if (to_string(m) == s) return m;
  throw Error(ErrorKind::Config, "unknown normal-form mode '" + std::string(s) + "'");
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

Index ix(std::size_t v) { return static_cast<Index>(v); }

// Orthonormal basis of the orthogonal complement of the row space of a (rows x n).
MatrixXd row_null(const MatrixXd& a) {
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
  const Index r = a.rows();
  return svd.matrixV().rightCols(a.cols() - r);
}

}  // namespace

NormalFormReport assemble_normal_form(const TorusChart& chart, const Structure& s, NormalMode mode,
                                      const NormalFormOptions& opt) {
  const std::size_t m = chart.m(), p = chart.p(), q = chart.integrals().size();
  if (p + q != m) throw Error(ErrorKind::InvalidArgument, "normal form needs p + q = m");
  const bool poisson = std::holds_alternative<PoissonBivector>(s);
  if ((mode == NormalMode::Poisson) != poisson)
    throw Error(ErrorKind::ModeMismatch, std::string("mode ") + std::string(to_string(mode)) + " does not match a " +
                                             (poisson ? "Poisson bivector" : "2-form"));
  const Tolerances& tol = chart.flows().tol();
  if (!poisson) {
    const auto& w = std::get<Structure2Form>(s);
    check_dimension_bound(p, w, chart.seed());
    const bool nondeg = w.rank_at(chart.seed()) == m;
    if ((mode == NormalMode::AlmostSymplectic || mode == NormalMode::Symplectic ||
         mode == NormalMode::Superintegrable) && !nondeg)
      throw Error(ErrorKind::ModeMismatch, std::string(to_string(mode)) + " mode needs a nondegenerate 2-form");
    if (mode == NormalMode::Symplectic && 2 * p != m)
      throw Error(ErrorKind::ModeMismatch, "symplectic mode needs p = m/2");
    if (mode == NormalMode::Superintegrable && 2 * p >= m)
      throw Error(ErrorKind::ModeMismatch, "superintegrable mode needs p < m/2");
  }

  LiouvilleFrames fr = liouville_frames(chart, opt.grid, opt.threads);
  const TorusGrid& grid = fr.grid;
  const std::size_t n = grid.x.size();
  std::vector<MatrixXd> g(n);
  parallel_for(n, opt.threads, [&](std::size_t f) {
    const auto& x = grid.x[f];
    const MatrixXd& e = fr.e[f];
    if (poisson) {
      MatrixXd ei = e.inverse();
      g[f] = ei * detail::matrix_at(std::get<PoissonBivector>(s).at(x), m) * ei.transpose();
    } else {
      g[f] = e.transpose() * detail::matrix_at(std::get<Structure2Form>(s).at(x), m) * e;
    }
  });

  NormalFormReport rep;
  rep.mode = mode;
  rep.p = p;
  rep.q = q;
  MatrixXd mean = MatrixXd::Zero(ix(m), ix(m));
  for (const auto& gf : g) mean += gf;
  mean /= static_cast<double>(n);
  rep.frame_structure = mean;
  for (const auto& gf : g) rep.invariance = std::max(rep.invariance, (gf - mean).cwiseAbs().maxCoeff());

  if (!poisson) {
    const auto& w = std::get<Structure2Form>(s);
    Compiled dw = w.exterior_derivative().compile();
    for (const auto& x : grid.x)
      for (double v : dw.eval(x)) rep.closedness = std::max(rep.closedness, std::fabs(v));
    for (const auto& gf : g) rep.isotropy = std::max(rep.isotropy, gf.topLeftCorner(ix(p), ix(p)).cwiseAbs().maxCoeff());
  } else {
    for (const auto& gf : g)
      rep.isotropy = std::max(rep.isotropy, gf.bottomRightCorner(ix(q), ix(q)).cwiseAbs().maxCoeff());
  }
  rep.angle_shift = MatrixXd::Zero(ix(p), ix(q));

  if (!poisson && mode == NormalMode::General2Form) {
    rep.action_jacobian = -mean.block(0, ix(p), ix(p), ix(q));
    rep.magnetic = mean.bottomRightCorner(ix(q), ix(q));
    rep.magnetic_norm = rep.magnetic.cwiseAbs().maxCoeff();
    rep.residual = std::max(rep.isotropy, rep.invariance);
    return rep;
  }
  if ((mode == NormalMode::Symplectic || mode == NormalMode::Superintegrable) && rep.closedness > tol.primitive)
    throw Error(ErrorKind::ModeMismatch, std::string(to_string(mode)) + " mode needs a closed 2-form (|d omega| = " +
                                             fmt17(rep.closedness) + ")");

  // New base coordinates w = M F: the p actions, then a complement.
  MatrixXd a, c;
  if (poisson) {
    MatrixXd fth = mean.block(ix(p), 0, ix(q), ix(p));   // Pi(dF_j, d theta_l)
    a = fth.completeOrthogonalDecomposition().pseudoInverse();
    c = row_null(fth.transpose());
  } else {
    a = -mean.block(0, ix(p), ix(p), ix(q));
    c = row_null(a);
  }
  rep.action_jacobian = a;
  MatrixXd mm(q, q);
  mm.topRows(ix(p)) = a;
  mm.bottomRows(ix(q - p)) = c.transpose();
  if (std::fabs(mm.determinant()) <= 1e-12 * std::pow(std::max(1.0, mm.norm()), static_cast<double>(q)))
    throw Error(ErrorKind::ModeMismatch, "action functions are not independent on this torus");
  const MatrixXd minv = mm.inverse();

  MatrixXd d = MatrixXd::Zero(ix(p), ix(q));
  MatrixXd b;
  if (poisson) {
    d.leftCols(ix(p)) = 0.5 * mean.topLeftCorner(ix(p), ix(p));
  } else {
    b = minv.transpose() * mean.bottomRightCorner(ix(q), ix(q)) * minv;
    if (mode == NormalMode::Symplectic || mode == NormalMode::Superintegrable) {
      d.leftCols(ix(p)) = -0.5 * b.topLeftCorner(ix(p), ix(p));
      d.rightCols(ix(q - p)) = -b.topRightCorner(ix(p), ix(q - p));
    }
  }
  rep.angle_shift = d;

  // (theta^, w) = S (theta, F) with theta^ = theta - D w.
  MatrixXd sm = MatrixXd::Zero(ix(m), ix(m));
  sm.topLeftCorner(ix(p), ix(p)).setIdentity();
  sm.topRightCorner(ix(p), ix(q)) = -d * mm;
  sm.bottomRightCorner(ix(q), ix(q)) = mm;
  const MatrixXd si = sm.inverse();
  std::vector<MatrixXd> g2(n);
  MatrixXd mean2 = MatrixXd::Zero(ix(m), ix(m));
  for (std::size_t f = 0; f < n; ++f) {
    g2[f] = poisson ? MatrixXd(sm * g[f] * sm.transpose()) : MatrixXd(si.transpose() * g[f] * si);
    mean2 += g2[f];
  }
  mean2 /= static_cast<double>(n);

  // Target block form.
  MatrixXd target = MatrixXd::Zero(ix(m), ix(m));
  // (theta_k, mu_k) entry is -1 for sum d mu ^ d theta and for sum d/d mu ^ d/d theta alike
  for (std::size_t k = 0; k < p; ++k) {
    target(ix(k), ix(p + k)) = -1.0;
    target(ix(p + k), ix(k)) = 1.0;
  }
  const std::size_t r = q - p;   // complement block
  switch (mode) {
    case NormalMode::AlmostSymplectic:
      target.bottomRightCorner(ix(q), ix(q)) = mean2.bottomRightCorner(ix(q), ix(q));
      rep.magnetic = b;
      break;
    case NormalMode::Symplectic:
      rep.magnetic = b;
      break;
    case NormalMode::Superintegrable:
    case NormalMode::Poisson:
      target.bottomRightCorner(ix(r), ix(r)) = mean2.bottomRightCorner(ix(r), ix(r));
      rep.magnetic = mean2.bottomRightCorner(ix(r), ix(r));
      break;
    case NormalMode::General2Form: break;
  }
  rep.magnetic_norm = rep.magnetic.size() ? rep.magnetic.cwiseAbs().maxCoeff() : 0.0;
  for (const auto& gf : g2) rep.residual = std::max(rep.residual, (gf - target).cwiseAbs().maxCoeff());
  return rep;
}

}  // namespace liouville
