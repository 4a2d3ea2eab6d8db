#include "liouville/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "liouville/exact.hpp"

namespace liouville {

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

std::vector<std::vector<double>> default_samples(std::size_t m) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  std::vector<std::vector<double>> pts(8, std::vector<double>(m));
  for (auto& p : pts)
    for (double& v : p) v = u(rng);
  return pts;
}

std::vector<Expr> gradient(const Expr& f, std::size_t m) {
  std::vector<Expr> g(m);
  for (std::size_t a = 0; a < m; ++a) g[a] = diff(f, a);
  return g;
}

}  // namespace

Expr VectorFieldExpr::apply(const Expr& f) const {
  Expr s;
  for (std::size_t a = 0; a < comp.size(); ++a) s = s + comp[a] * diff(f, a);
  return canonical(s);
}

VectorFieldExpr operator+(const VectorFieldExpr& a, const VectorFieldExpr& b) {
  VectorFieldExpr r = a;
  for (std::size_t i = 0; i < r.comp.size(); ++i) r.comp[i] = canonical(a.comp[i] + b.comp[i]);
  return r;
}

VectorFieldExpr operator*(const Expr& s, const VectorFieldExpr& a) {
  VectorFieldExpr r = a;
  for (auto& c : r.comp) c = canonical(s * c);
  return r;
}

VectorFieldExpr commutator(const VectorFieldExpr& x, const VectorFieldExpr& y) {
  VectorFieldExpr r;
  for (std::size_t a = 0; a < x.dim(); ++a) r.comp.push_back(canonical(x.apply(y[a]) - y.apply(x[a])));
  return r;
}

// ---------------------------------------------------------------------------

TensorField::TensorField(std::size_t m, std::size_t up, std::size_t down)
    : m_(m), up_(up), down_(down), comp_(ipow(m, up + down)) {}

std::size_t TensorField::flat(std::span<const std::size_t> idx) const {
  std::size_t f = 0;
  for (std::size_t i : idx) f = f * m_ + i;
  return f;
}

std::vector<std::size_t> TensorField::unflat(std::size_t f) const {
  std::vector<std::size_t> idx(order());
  for (std::size_t k = idx.size(); k-- > 0;) {
    idx[k] = f % m_;
    f /= m_;
  }
  return idx;
}

TensorField TensorField::scalar(std::size_t m, const Expr& f) {
  TensorField t(m, 0, 0);
  t.comp_[0] = f;
  return t;
}

TensorField TensorField::vector(const VectorFieldExpr& x) {
  TensorField t(x.dim(), 1, 0);
  t.comp_ = x.comp;
  return t;
}

TensorField TensorField::covector(std::vector<Expr> c) {
  TensorField t(c.size(), 0, 1);
  t.comp_ = std::move(c);
  return t;
}

TensorField TensorField::differential(const Expr& f, std::size_t m) { return covector(gradient(f, m)); }

TensorField tensor_product(const TensorField& a, const TensorField& b) {
  // Upper indices of both factors come first, then the lower ones.
  const std::size_t m = a.dim();
  TensorField r(m, a.up() + b.up(), a.down() + b.down());
  for (std::size_t f = 0; f < r.size(); ++f) {
    auto idx = r.unflat(f);
    std::vector<std::size_t> ia, ib;
    ia.insert(ia.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(a.up()));
    ib.insert(ib.end(), idx.begin() + static_cast<std::ptrdiff_t>(a.up()),
              idx.begin() + static_cast<std::ptrdiff_t>(a.up() + b.up()));
    auto lo = idx.begin() + static_cast<std::ptrdiff_t>(a.up() + b.up());
    ia.insert(ia.end(), lo, lo + static_cast<std::ptrdiff_t>(a.down()));
    ib.insert(ib.end(), lo + static_cast<std::ptrdiff_t>(a.down()), idx.end());
    r[f] = canonical(a.at(ia) * b.at(ib));
  }
  return r;
}

TensorField operator*(const Expr& s, const TensorField& t) {
  TensorField r = t;
  for (std::size_t f = 0; f < r.size(); ++f) r[f] = canonical(s * t[f]);
  return r;
}

TensorField operator+(const TensorField& a, const TensorField& b) {
  if (a.dim() != b.dim() || a.up() != b.up() || a.down() != b.down())
    throw Error(ErrorKind::InvalidArgument, "tensor type mismatch");
  TensorField r = a;
  for (std::size_t f = 0; f < r.size(); ++f) r[f] = canonical(a[f] + b[f]);
  return r;
}

// ---------------------------------------------------------------------------

Structure2Form::Structure2Form(std::size_t m) : m_(m), w_(m * m) {}

void Structure2Form::set(std::size_t a, std::size_t b, Expr v) {
  if (a == b) throw Error(ErrorKind::InvalidArgument, "diagonal entry of a 2-form");
  w_[a * m_ + b] = v;
  w_[b * m_ + a] = canonical(-v);
}

bool Structure2Form::is_constant() const {
  for (const Expr& e : w_)
    if (!e.is_const()) return false;
  return true;
}

TensorField Structure2Form::as_tensor() const {
  TensorField t(m_, 0, 2);
  for (std::size_t f = 0; f < t.size(); ++f) t[f] = w_[f];
  return t;
}

TensorField Structure2Form::exterior_derivative() const {
  TensorField t(m_, 0, 3);
  for (std::size_t f = 0; f < t.size(); ++f) {
    auto i = t.unflat(f);
    const std::size_t a = i[0], b = i[1], c = i[2];
    t[f] = canonical(diff((*this)(b, c), a) + diff((*this)(c, a), b) + diff((*this)(a, b), c));
  }
  return t;
}

std::vector<double> Structure2Form::at(std::span<const double> x) const {
  return Compiled(w_, m_).eval(x);
}

std::size_t Structure2Form::rank_at(std::span<const double> x) const {
  auto w = at(x);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(
      w.data(), static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-12 * s(0)) ++r;
  return r;
}

PoissonBivector::PoissonBivector(std::size_t m) : m_(m), p_(m * m) {}

void PoissonBivector::set(std::size_t a, std::size_t b, Expr v) {
  if (a == b) throw Error(ErrorKind::InvalidArgument, "diagonal entry of a bivector");
  p_[a * m_ + b] = v;
  p_[b * m_ + a] = canonical(-v);
}

TensorField PoissonBivector::as_tensor() const {
  TensorField t(m_, 2, 0);
  for (std::size_t f = 0; f < t.size(); ++f) t[f] = p_[f];
  return t;
}

std::vector<double> PoissonBivector::at(std::span<const double> x) const { return Compiled(p_, m_).eval(x); }

// ---------------------------------------------------------------------------

std::vector<double> solve_hamiltonian_at(const Structure2Form& omega, const Expr& h, std::span<const double> x,
                                         std::size_t* kernel_dim) {
  const auto m = static_cast<Eigen::Index>(omega.dim());
  auto w = omega.at(x);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(w.data(), m, m);
  auto gv = Compiled(gradient(h, omega.dim()), omega.dim()).eval(x);
  Eigen::Map<const Eigen::VectorXd> g(gv.data(), m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = s.size() > 0 ? 1e-12 * s(0) : 0.0;
  Eigen::VectorXd ug = svd.matrixU().transpose() * g;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (s(i) > cut && s(i) > 0.0) {
      ug(i) /= s(i);
      ++rank;
    } else {
      ug(i) = 0.0;
    }
  }
  Eigen::VectorXd xs = svd.matrixV() * ug;
  double res = (mat * xs - g).norm();
  if (res > 1e-10 * std::max(1.0, g.norm()))
    throw Error(ErrorKind::InconsistentSystem,
                "-dH is not in the image of the contraction map (residual " + std::to_string(res) + ")");
  if (kernel_dim) *kernel_dim = omega.dim() - rank;
  return {xs.data(), xs.data() + m};
}

HamiltonianSolve hamiltonian_vf_2form(const Structure2Form& omega, const Expr& h,
                                      std::span<const std::vector<double>> samples) {
  const std::size_t m = omega.dim();
  std::vector<std::vector<double>> own;
  if (samples.empty()) {
    own = default_samples(m);
    samples = own;
  }
  HamiltonianSolve out;
  auto grad = gradient(h, m);
  if (omega.is_constant()) {
    exact::QMatrix w(m, m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) w(a, b) = omega(a, b).value();
    exact::QMatrix ker = exact::nullspace(w);
    out.kernel_dim = ker.cols();
    // -dH must annihilate ker omega.
    for (std::size_t k = 0; k < ker.cols(); ++k) {
      Expr s;
      for (std::size_t b = 0; b < m; ++b) s = s + Expr::constant(ker(b, k)) * grad[b];
      s = canonical(s);
      if (s.is_zero()) continue;
      Compiled c(std::vector<Expr>{s}, m);
      for (const auto& x : samples) {
        double v = 0.0;
        try {
          v = c.eval(x)[0];
        } catch (const Error&) {
          continue;
        }
        if (std::fabs(v) > 1e-10)
          throw Error(ErrorKind::InconsistentSystem, "dH does not vanish on ker omega: " + print(s));
      }
    }
    exact::QMatrix pw = exact::pinv(w);
    for (std::size_t a = 0; a < m; ++a) {
      Expr s;
      for (std::size_t b = 0; b < m; ++b)
        if (sgn(pw(a, b)) != 0) s = s + Expr::constant(pw(a, b)) * grad[b];
      out.field.comp.push_back(canonical(s));
    }
    out.symbolic = true;
    return out;
  }
  // Non-constant omega: pointwise solves only; verify consistency and that
  // the solution preserves the structure where dω may be nonzero.
  Compiled dw(omega.exterior_derivative().components(), m);
  for (const auto& x : samples) {
    std::size_t kd = 0;
    std::vector<double> xs;
    try {
      xs = solve_hamiltonian_at(omega, h, x, &kd);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Domain) continue;
      throw;
    }
    out.kernel_dim = std::max(out.kernel_dim, kd);
    auto d = dw.eval(x);
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t c = 0; c < m; ++c) {
        double s = 0.0;
        for (std::size_t a = 0; a < m; ++a) s += xs[a] * d[(a * m + b) * m + c];
        if (std::fabs(s) > 1e-9)
          throw Error(ErrorKind::NotStructurePreserving, "X _| d omega = " + std::to_string(s) + " at a sample point");
      }
  }
  return out;
}

VectorFieldExpr hamiltonian_vf_poisson(const PoissonBivector& pi, const Expr& h) {
  const std::size_t m = pi.dim();
  auto grad = gradient(h, m);
  VectorFieldExpr x;
  for (std::size_t a = 0; a < m; ++a) {
    Expr s;
    for (std::size_t b = 0; b < m; ++b) s = s + grad[b] * pi(b, a);
    x.comp.push_back(canonical(s));
  }
  return x;
}

Expr bracket(const Expr& a, const Expr& b, const PoissonBivector& pi) {
  // sum_ab Pi^{ab} d_a A d_b B, written as X_A(B).
  return hamiltonian_vf_poisson(pi, a).apply(b);
}

Expr bracket(const Expr& a, const Expr& b, const Structure2Form& omega, std::span<const std::vector<double>> samples) {
  HamiltonianSolve xa = hamiltonian_vf_2form(omega, a, samples);
  hamiltonian_vf_2form(omega, b, samples);
  if (!xa.symbolic)
    throw Error(ErrorKind::InvalidArgument, "symbolic bracket needs a constant-coefficient 2-form");
  return xa.field.apply(b);
}

TensorField lie_derivative(const VectorFieldExpr& x, const TensorField& g) {
  const std::size_t m = g.dim();
  std::vector<std::vector<Expr>> dx(m, std::vector<Expr>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t c = 0; c < m; ++c) dx[a][c] = diff(x[a], c);
  TensorField r(m, g.up(), g.down());
  for (std::size_t f = 0; f < g.size(); ++f) {
    Expr s = x.apply(g[f]);
    auto idx = g.unflat(f);
    for (std::size_t i = 0; i < g.order(); ++i) {
      const bool upper = i < g.up();
      auto j = idx;
      for (std::size_t c = 0; c < m; ++c) {
        j[i] = c;
        if (upper)
          s = s - dx[idx[i]][c] * g.at(j);
        else
          s = s + dx[c][idx[i]] * g.at(j);
      }
    }
    r[f] = canonical(s);
  }
  return r;
}

TensorField interior(const VectorFieldExpr& x, const TensorField& t) {
  if (t.up() != 0 || t.down() == 0) throw Error(ErrorKind::InvalidArgument, "interior product needs a covariant tensor");
  const std::size_t m = t.dim();
  TensorField r(m, 0, t.down() - 1);
  for (std::size_t f = 0; f < r.size(); ++f) {
    auto idx = r.unflat(f);
    idx.insert(idx.begin(), 0);
    Expr s;
    for (std::size_t a = 0; a < m; ++a) {
      idx[0] = a;
      s = s + x[a] * t.at(idx);
    }
    r[f] = canonical(s);
  }
  return r;
}

TensorField jacobiator(const PoissonBivector& pi) {
  const std::size_t m = pi.dim();
  TensorField j(m, 3, 0);
  for (std::size_t f = 0; f < j.size(); ++f) {
    auto i = j.unflat(f);
    const std::size_t a = i[0], b = i[1], c = i[2];
    Expr s;
    for (std::size_t d = 0; d < m; ++d)
      s = s + pi(d, a) * diff(pi(b, c), d) + pi(d, b) * diff(pi(c, a), d) + pi(d, c) * diff(pi(a, b), d);
    j[f] = canonical(s);
  }
  return j;
}

double max_abs_at(const TensorField& t, std::span<const std::vector<double>> points) {
  Compiled c = t.compile();
  double worst = 0.0;
  for (const auto& x : points)
    for (double v : c.eval(x)) worst = std::max(worst, std::fabs(v));
  return worst;
}

double check_jacobi(const PoissonBivector& pi, std::span<const std::vector<double>> points) {
  return max_abs_at(jacobiator(pi), points);
}

}  // namespace liouville
