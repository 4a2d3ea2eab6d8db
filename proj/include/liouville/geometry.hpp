#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liouville/compile.hpp"
#include "liouville/expr.hpp"

namespace liouville {

/// Components X^a of a vector field on R^m.
struct VectorFieldExpr {
  std::vector<Expr> comp;

  VectorFieldExpr() = default;
  explicit VectorFieldExpr(std::vector<Expr> c) : comp(std::move(c)) {}
  std::size_t dim() const { return comp.size(); }
  const Expr& operator[](std::size_t a) const { return comp[a]; }
  /// X(f) = sum_a X^a d_a f.
  Expr apply(const Expr& f) const;
  Compiled compile() const { return Compiled(comp, comp.size()); }
};

VectorFieldExpr operator+(const VectorFieldExpr& a, const VectorFieldExpr& b);
VectorFieldExpr operator*(const Expr& s, const VectorFieldExpr& a);
/// [X, Y]^a = X(Y^a) - Y(X^a).
VectorFieldExpr commutator(const VectorFieldExpr& x, const VectorFieldExpr& y);

/// Dense tensor with `up` contravariant and `down` covariant indices; the
/// flat index runs over upper indices first, row-major.
class TensorField {
 public:
  TensorField() = default;
  TensorField(std::size_t m, std::size_t up, std::size_t down);

  std::size_t dim() const { return m_; }
  std::size_t up() const { return up_; }
  std::size_t down() const { return down_; }
  std::size_t order() const { return up_ + down_; }
  std::size_t size() const { return comp_.size(); }

  Expr& operator[](std::size_t flat) { return comp_[flat]; }
  const Expr& operator[](std::size_t flat) const { return comp_[flat]; }
  Expr& at(std::span<const std::size_t> idx) { return comp_[flat(idx)]; }
  const Expr& at(std::span<const std::size_t> idx) const { return comp_[flat(idx)]; }
  std::size_t flat(std::span<const std::size_t> idx) const;
  std::vector<std::size_t> unflat(std::size_t flat) const;
  const std::vector<Expr>& components() const { return comp_; }

  Compiled compile() const { return Compiled(comp_, m_); }

  static TensorField scalar(std::size_t m, const Expr& f);
  static TensorField vector(const VectorFieldExpr& x);
  /// Covector from components (df has components d_a f).
  static TensorField covector(std::vector<Expr> c);
  static TensorField differential(const Expr& f, std::size_t m);

 private:
  std::size_t m_ = 0, up_ = 0, down_ = 0;
  std::vector<Expr> comp_;
};

TensorField tensor_product(const TensorField& a, const TensorField& b);
TensorField operator*(const Expr& s, const TensorField& t);
TensorField operator+(const TensorField& a, const TensorField& b);

/// Antisymmetric matrix of a 2-form; omega(a, b) = -omega(b, a).
class Structure2Form {
 public:
  Structure2Form() = default;
  explicit Structure2Form(std::size_t m);
  /// Entries for a < b; the rest follow by antisymmetry.
  void set(std::size_t a, std::size_t b, Expr v);

  std::size_t dim() const { return m_; }
  const Expr& operator()(std::size_t a, std::size_t b) const { return w_[a * m_ + b]; }
  bool is_constant() const;
  TensorField as_tensor() const;
  /// (d omega)_{abc} = d_a w_bc + d_b w_ca + d_c w_ab.
  TensorField exterior_derivative() const;
  /// omega(x) as a dense row-major matrix.
  std::vector<double> at(std::span<const double> x) const;
  std::size_t rank_at(std::span<const double> x) const;

 private:
  std::size_t m_ = 0;
  std::vector<Expr> w_;
};

class PoissonBivector {
 public:
  PoissonBivector() = default;
  explicit PoissonBivector(std::size_t m);
  void set(std::size_t a, std::size_t b, Expr v);

  std::size_t dim() const { return m_; }
  const Expr& operator()(std::size_t a, std::size_t b) const { return p_[a * m_ + b]; }
  TensorField as_tensor() const;
  std::vector<double> at(std::span<const double> x) const;

 private:
  std::size_t m_ = 0;
  std::vector<Expr> p_;
};

/// Solution of X _| omega = -dH.
struct HamiltonianSolve {
  VectorFieldExpr field;         // exact when `symbolic`
  bool symbolic = false;
  std::size_t kernel_dim = 0;    // dim ker omega; >0 means X is only fixed modulo the kernel
};

/// Exact solve for constant-coefficient omega (minimum-norm solution via the
/// rational pseudo-inverse). For non-constant omega, `field` is empty and
/// callers use solve_hamiltonian_at. Consistency and X _| d omega = 0 are
/// checked at `samples`; throws InconsistentSystem / NotStructurePreserving.
HamiltonianSolve hamiltonian_vf_2form(const Structure2Form& omega, const Expr& h,
                                      std::span<const std::vector<double>> samples = {});

/// Pointwise minimum-norm solve by SVD (singular values below 1e-12 of the
/// largest count as zero). Throws InconsistentSystem if the residual exceeds
/// 1e-10 relative to |dH|.
std::vector<double> solve_hamiltonian_at(const Structure2Form& omega, const Expr& h, std::span<const double> x,
                                         std::size_t* kernel_dim = nullptr);

/// X^a = sum_b d_b H Pi^{ba}.
VectorFieldExpr hamiltonian_vf_poisson(const PoissonBivector& pi, const Expr& h);

/// {A, B} = sum Pi^{ab} d_a A d_b B.
Expr bracket(const Expr& a, const Expr& b, const PoissonBivector& pi);
/// {A, B} = X_A(B) with X_A from the exact 2-form solve.
Expr bracket(const Expr& a, const Expr& b, const Structure2Form& omega,
             std::span<const std::vector<double>> samples = {});

TensorField lie_derivative(const VectorFieldExpr& x, const TensorField& g);

/// (X _| T) for T with only covariant indices: contraction into the first slot.
TensorField interior(const VectorFieldExpr& x, const TensorField& t);

/// Symbolic Jacobiator J^{abc}.
TensorField jacobiator(const PoissonBivector& pi);
double check_jacobi(const PoissonBivector& pi, std::span<const std::vector<double>> points);

/// Largest |component| of a tensor at the given points.
double max_abs_at(const TensorField& t, std::span<const std::vector<double>> points);

}  // namespace liouville
