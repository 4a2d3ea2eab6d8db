#pragma once

// Exact formal normal forms: number-field scalars, truncated power series,
// Jordan-Chevalley splitting, resonances, Lie-transform normalization and
// Williamson types.

#include <complex>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "liouville/exact.hpp"
#include "liouville/expr.hpp"

namespace liouville {

/// beta_a * beta_b = value, with value a Q-linear combination of 1 and the
/// basis constants ("2", "is2", "-s2").
struct ProductRule {
  std::string a, b;
  std::string value;
};

namespace detail {
struct FieldData;
}

class Scalar;

/// Q-span of 1 and the declared constants, closed under the declared
/// products. The constants are assumed Q-linearly independent.
class NumberField {
 public:
  NumberField();   // Q
  NumberField(IrrationalBasis basis, std::span<const ProductRule> table);

  std::size_t dim() const;   // 1 + number of constants
  const IrrationalBasis& basis() const;
  std::string name(std::size_t l) const;   // "1" for l = 0

  Scalar zero() const;
  Scalar one() const;
  Scalar rational(const Rational& q) const;
  Scalar generator(std::size_t l) const;
  /// Constant expression over the declared names; throws FieldTooSmall for
  /// anything outside the field (pi, sqrt of a non-square, ...).
  Scalar parse(std::string_view source) const;
  Scalar from_expr(const Expr& e) const;

  const std::shared_ptr<const detail::FieldData>& data() const { return d_; }

 private:
  std::shared_ptr<const detail::FieldData> d_;
};

/// q_0 + sum_l q_l beta_l. A default-constructed scalar is the rational 0
/// and adopts the field of whatever it is combined with.
class Scalar {
 public:
  Scalar() = default;
  Scalar(std::shared_ptr<const detail::FieldData> f, std::vector<Rational> c);
  Scalar(long v);   // NOLINT: rationals mix freely with field elements

  std::size_t dim() const;
  Rational coeff(std::size_t l) const { return l < c_.size() ? c_[l] : Rational(0); }
  bool is_zero() const;
  bool is_rational() const;
  std::complex<double> value() const;
  /// Numeric value of basis element l of this scalar's field (1 for l = 0).
  std::complex<double> basis_value(std::size_t l) const;
  std::string str() const;
  Scalar inverse() const;   // NotInvertible for 0 or an undeclared inverse
  const std::shared_ptr<const detail::FieldData>& field() const { return f_; }

  friend Scalar operator+(const Scalar& a, const Scalar& b);
  friend Scalar operator-(const Scalar& a, const Scalar& b);
  friend Scalar operator-(const Scalar& a);
  friend Scalar operator*(const Scalar& a, const Scalar& b);
  friend Scalar operator/(const Scalar& a, const Scalar& b) { return a * b.inverse(); }
  friend Scalar operator*(const Rational& q, const Scalar& a);
  friend bool operator==(const Scalar& a, const Scalar& b);
  Scalar& operator+=(const Scalar& b) { return *this = *this + b; }
  Scalar& operator-=(const Scalar& b) { return *this = *this - b; }

 private:
  std::shared_ptr<const detail::FieldData> f_;
  std::vector<Rational> c_;
};

class KMatrix {
 public:
  KMatrix() = default;
  KMatrix(std::size_t rows, std::size_t cols) : r_(rows), c_(cols), d_(rows * cols) {}
  static KMatrix identity(std::size_t n);
  static KMatrix diagonal(std::span<const Scalar> d);
  static KMatrix from_rational(const exact::QMatrix& q);

  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }
  Scalar& operator()(std::size_t i, std::size_t j) { return d_[i * c_ + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const { return d_[i * c_ + j]; }
  bool is_zero() const;
  bool is_diagonal() const;
  KMatrix transpose() const;

  friend KMatrix operator*(const KMatrix& a, const KMatrix& b);
  friend KMatrix operator+(const KMatrix& a, const KMatrix& b);
  friend KMatrix operator-(const KMatrix& a, const KMatrix& b);
  friend bool operator==(const KMatrix& a, const KMatrix& b);

 private:
  std::size_t r_ = 0, c_ = 0;
  std::vector<Scalar> d_;
};

/// Row echelon form over the field; returns pivot columns.
std::vector<std::size_t> rref(KMatrix& a);
KMatrix nullspace(const KMatrix& a);   // columns
KMatrix inverse(const KMatrix& a);     // NotInvertible

using Exponent = std::vector<int>;
int degree(const Exponent& k);

/// Truncated multivariate power series; coefficients above the truncation
/// degree are dropped and zero coefficients are never stored.
class FormalSeries {
 public:
  FormalSeries() = default;
  FormalSeries(std::size_t nvars, int truncation) : m_(nvars), n_(truncation) {}
  static FormalSeries variable(std::size_t nvars, int truncation, std::size_t j);
  static FormalSeries constant(std::size_t nvars, int truncation, const Scalar& c);

  std::size_t nvars() const { return m_; }
  int truncation() const { return n_; }
  const std::map<Exponent, Scalar>& terms() const { return t_; }
  Scalar coeff(const Exponent& k) const;
  void add_term(const Exponent& k, const Scalar& c);
  bool is_zero() const { return t_.empty(); }
  FormalSeries degree_part(int d) const;
  FormalSeries truncated(int n) const;
  int max_degree() const;   // -1 for zero

  FormalSeries derivative(std::size_t j) const;
  friend FormalSeries operator+(const FormalSeries& a, const FormalSeries& b);
  friend FormalSeries operator-(const FormalSeries& a, const FormalSeries& b);
  friend FormalSeries operator*(const FormalSeries& a, const FormalSeries& b);
  friend FormalSeries operator*(const Scalar& s, const FormalSeries& a);
  friend bool operator==(const FormalSeries& a, const FormalSeries& b) { return a.m_ == b.m_ && a.t_ == b.t_; }
  FormalSeries& operator+=(const FormalSeries& b) { return *this = *this + b; }

 private:
  std::size_t m_ = 0;
  int n_ = 0;
  std::map<Exponent, Scalar> t_;
};

using VectorSeries = std::vector<FormalSeries>;

/// X(f) = sum_a X^a d_a f.
FormalSeries apply(const VectorSeries& x, const FormalSeries& f);
/// [X, Y]^a = X(Y^a) - Y(X^a).
VectorSeries lie_bracket(const VectorSeries& x, const VectorSeries& y);
/// {A, B} = sum Pi^{ab} d_a A d_b B.
FormalSeries poisson_bracket(const FormalSeries& a, const FormalSeries& b, const KMatrix& pi);
/// f(P u) as a series in u.
FormalSeries substitute_linear(const FormalSeries& f, const KMatrix& p);
bool is_zero(const VectorSeries& x);

/// Polynomial expression in the coordinates; throws InvalidArgument for
/// non-polynomial operations and FieldTooSmall for constants outside the field.
FormalSeries series_from_expr(const Expr& e, std::size_t nvars, int truncation, const NumberField& field);
/// One line per monomial, "k_1 ... k_m : coefficient", graded-lex order.
std::string series_to_text(const FormalSeries& f);
FormalSeries series_from_text(std::string_view text, std::size_t nvars, int truncation, const NumberField& field);

struct LinearPart {
  KMatrix a, s, n;                  // a = s + n, [s, n] = 0
  KMatrix basis;                    // columns: generalized eigenvectors, grouped by eigenvalue
  std::vector<Scalar> eigenvalues;  // eigenvalue of each basis column
  bool semisimple = true;           // n == 0
};

/// Exact Jordan-Chevalley decomposition. Eigenvalues are located numerically,
/// identified as field elements by integer relation search and then verified
/// exactly; FieldTooSmall names the factor that does not split.
LinearPart split_linear(const KMatrix& a, const NumberField& field);

struct ToricData {
  std::size_t degree = 0;
  std::vector<exact::ZRow> generators;   // Z_i = sum_j a_ij z_j d/dz_j
  std::vector<Scalar> lambdas;           // gamma = sum_i lambda_i a_i
};

/// d = rank over Q of the coefficient matrix of gamma.
ToricData toric_degree(std::span<const Scalar> gamma);
/// True when gamma = sum_i lambda_i a_i holds exactly.
bool reconstructs(const ToricData& t, std::span<const Scalar> gamma);

struct ResonanceData {
  std::vector<Scalar> gamma;
  int maxdeg = 0;
  std::vector<std::vector<Exponent>> resonant;   // per component j: <gamma, k> = gamma_j, 1 <= |k| <= maxdeg
  std::vector<exact::ZRow> kernel;               // {k : <gamma, k> = 0}, Hermite basis
  ToricData toric;
};

ResonanceData resonance_lattice(std::span<const Scalar> gamma, int maxdeg);

enum class PdMode { VectorField, Hamiltonian };
std::string_view to_string(PdMode mode);

struct PdStep {
  int degree = 0;
  VectorSeries generator;   // Y_r, or the single generating function W_r
};

struct PdResult {
  PdMode mode = PdMode::VectorField;
  int maxdeg = 0;
  LinearPart linear;
  KMatrix frame;              // x = frame * u
  KMatrix poisson;            // structure matrix in u (Hamiltonian mode)
  std::vector<Scalar> gamma;  // semisimple eigenvalues along u
  VectorSeries input;         // the input written in u
  VectorSeries normalized;    // in u
  std::vector<PdStep> log;
  bool nilpotent = false;     // homological operator inverted with its nilpotent part
  ResonanceData resonance;
};

/// Degree-by-degree Lie-transform normalization. Vector-field mode takes the
/// m components of X; Hamiltonian mode takes {H} and the constant structure
/// matrix Pi (canonical pairs (x_1..x_n, y_1..y_n) when omitted).
PdResult pd_normalize(const VectorSeries& input, int maxdeg, PdMode mode, const NumberField& field,
                      const KMatrix* structure = nullptr);

/// Applies exp(ad_Y) for each logged generator to a series already in u.
VectorSeries replay(const VectorSeries& input_u, std::span<const PdStep> log, PdMode mode, const KMatrix& poisson);

/// [X_norm, X^ss] (vector fields) or X^ss(H_norm) (Hamiltonians), in u.
VectorSeries semisimple_defect(const PdResult& r);

/// f(frame^{-1} x): a series in u rewritten in the input coordinates.
FormalSeries to_input_coordinates(const FormalSeries& f, const KMatrix& frame);

enum class BlockKind { Elliptic, Hyperbolic, FocusFocus };
std::string_view to_string(BlockKind kind);

struct WilliamsonBlock {
  BlockKind kind = BlockKind::Elliptic;
  std::complex<double> eigenvalue;   // representative: i w, a, or a + i b with a, b > 0
};

struct WilliamsonType {
  std::size_t ke = 0, kh = 0, kf = 0;
  std::vector<WilliamsonBlock> blocks;
};

/// Quadratic H in canonical coordinates (x_1..x_n, y_1..y_n) with rational
/// coefficients. DegenerateQuadraticPart on a zero eigenvalue,
/// UnresolvedMultiplicity when the linearization is not semisimple.
WilliamsonType williamson_classify(const FormalSeries& h2);
std::size_t real_toric_degree(const WilliamsonType& w);

/// Structure matrix with {x_i, y_i} = 1 on 2n variables.
KMatrix canonical_structure(std::size_t n);

}  // namespace liouville
