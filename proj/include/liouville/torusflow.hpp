#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liouville/geometry.hpp"

namespace liouville {

struct Tolerances {
  double commute = 1e-8;
  double firstint = 1e-8;
  double ret = 1e-7;          // return tolerance for lattice vectors
  double ode_abs = 1e-12;
  double ode_rel = 1e-10;
  double box = 1e6;           // integration aborts with DomainExit outside |x|_inf <= box
  double horizon = 50.0;      // return search horizon in units of the period estimate
  double max_time = 1e4;      // cap on the search horizon in flow time
  double avg = 1e-6;          // torus-average deviation
  double hypothesis = 1e-8;   // Lie-derivative precondition
  double conformal = 1e-6;
  double conformal_gen = 1e-5;
  double quasi = 1e-6;        // quasi-periodicity residual
  double isotropy = 1e-7;
  double primitive = 1e-9;    // d alpha = omega check
  double rank = 1e-8;         // relative singular-value cut for rank decisions
};

/// Declared integrable system of type (p, q) on R^m.
struct SystemSpec {
  std::vector<std::string> coords;
  std::vector<VectorFieldExpr> fields;   // X_1..X_p
  std::vector<Expr> integrals;           // F_1..F_q
  std::vector<Expr> hamiltonians;        // empty or one per field
  std::optional<Structure2Form> omega;
  std::optional<PoissonBivector> poisson;
  IrrationalBasis basis;
  Tolerances tol;

  std::size_t m() const { return coords.size(); }
  std::size_t p() const { return fields.size(); }
  std::size_t q() const { return integrals.size(); }
};

/// Dimension and count consistency; throws InvalidArgument.
void validate(const SystemSpec& spec);

struct SystemCheck {
  double commute = 0.0;   // max |[X_i, X_j]|
  double firstint = 0.0;  // max |X_i(F_j)|
  double min_sv_fields = 0.0;
  double min_sv_integrals = 0.0;
};

/// Measures the integrability conditions at the sample points and the
/// nondegeneracy at `seed`. Throws HypothesisViolated when commutation or
/// invariance fail beyond tolerance, DegenerateSeed when the wedge products
/// vanish at the seed.
SystemCheck check_system(const SystemSpec& spec, std::span<const double> seed,
                         std::span<const std::vector<double>> samples);

/// The p fields compiled into one tape, with optional Jacobians.
class Flows {
 public:
  explicit Flows(const SystemSpec& spec, bool jacobians = true);
  explicit Flows(const std::vector<VectorFieldExpr>& fields, const Tolerances& tol = {}, bool jacobians = true);

  std::size_t m() const { return m_; }
  std::size_t p() const { return p_; }
  const Tolerances& tol() const { return tol_; }

  /// Columns X_i(x), as an m x p matrix.
  Eigen::MatrixXd fields_at(std::span<const double> x) const;
  /// sum_i c_i X_i(x).
  void combined(std::span<const double> c, std::span<const double> x, std::span<double> dx) const;
  /// Jacobian of sum_i c_i X_i at x, row-major m x m.
  void combined_jacobian(std::span<const double> c, std::span<const double> x, std::span<double> jac) const;

  /// Unit-time flow of sum_i tau_i X_i, i.e. the composed flows at joint time tau.
  std::vector<double> flow(std::span<const double> tau, std::span<const double> x0) const;
  /// Same, also returning the derivative of the flow map (row-major m x m).
  std::vector<double> flow_variational(std::span<const double> tau, std::span<const double> x0,
                                       std::vector<double>& jac) const;
  /// Flows X_1 for tau_1, then X_2 for tau_2, ... in the given order.
  std::vector<double> flow_composed(std::span<const double> tau, std::span<const double> x0,
                                    std::span<const std::size_t> order) const;

 private:
  std::size_t m_ = 0, p_ = 0;
  Tolerances tol_;
  Compiled fields_;
  Compiled jac_;
  bool has_jac_ = false;
};

/// Adaptive Runge-Kutta-Fehlberg 7(8) flow of X for time t (t may be negative).
/// Throws StepFailure on step-size collapse or non-finite state, DomainExit
/// when the trajectory leaves the box or the field's domain.
std::vector<double> integrate_flow(const VectorFieldExpr& x, std::span<const double> x0, double t,
                                   const Tolerances& tol = {});

/// Rows of L generate the return lattice of the joint flow at x0.
Eigen::MatrixXd find_period_lattice(const Flows& flows, std::span<const double> x0);
Eigen::MatrixXd find_period_lattice(const SystemSpec& spec, std::span<const double> x0);

/// Greedy pairwise size reduction with a deterministic order and sign.
Eigen::MatrixXd reduce_lattice(Eigen::MatrixXd basis);
/// Integer matrix U with B = U A when both bases span the same lattice;
/// nullopt when the change of basis is not integral and unimodular within tol.
std::optional<Eigen::MatrixXi> unimodular_between(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol);
/// Re-expresses `lattice` in the basis closest to `reference` (same lattice,
/// unimodular change), so that neighbouring tori use continuous bases.
Eigen::MatrixXd align_lattice(const Eigen::MatrixXd& lattice, const Eigen::MatrixXd& reference);

class TorusChart {
 public:
  TorusChart() = default;
  TorusChart(std::shared_ptr<const Flows> flows, std::vector<double> x0, Eigen::MatrixXd lattice,
             std::vector<Expr> integrals);

  const std::vector<double>& seed() const { return x0_; }
  const Eigen::MatrixXd& lattice() const { return l_; }
  /// X_i = sum_j a_ij d/d theta_j.
  const Eigen::MatrixXd& frequencies() const { return a_; }
  const std::vector<double>& levels() const { return levels_; }
  const std::vector<Expr>& integrals() const { return integrals_; }
  const Flows& flows() const { return *flows_; }
  std::shared_ptr<const Flows> flows_ptr() const { return flows_; }
  std::size_t p() const { return static_cast<std::size_t>(l_.rows()); }
  std::size_t m() const { return x0_.size(); }
  static constexpr const char* composition = "exp(sum_i t_i X_i): commuting flows composed at joint time t";

  /// Torus point with angles theta (period 1).
  std::vector<double> point(std::span<const double> theta) const;
  /// Angles of a torus point, in [0, 1).
  std::vector<double> angles(std::span<const double> x) const;
  /// Z_k(x) = sum_i L_ki X_i(x): the period-1 generators of the torus action.
  Eigen::MatrixXd generators_at(std::span<const double> x) const;
  /// Same chart with the lattice basis replaced by U L.
  TorusChart with_basis(const Eigen::MatrixXi& u) const;
  TorusChart with_lattice(Eigen::MatrixXd l) const;

 private:
  std::shared_ptr<const Flows> flows_;
  std::vector<double> x0_;
  Eigen::MatrixXd l_, a_;
  std::vector<double> levels_;
  std::vector<Expr> integrals_;
  std::vector<std::vector<double>> coarse_theta_, coarse_x_;
};

TorusChart build_chart(const SystemSpec& spec, std::span<const double> x0);
TorusChart build_chart(std::shared_ptr<const Flows> flows, const std::vector<Expr>& integrals,
                       std::span<const double> x0);

/// Max over n_samples torus points of the deviation of X, written in the
/// angle frame, from its value at the seed; X not tangent to the torus shows
/// up as a large residual.
struct QuasiPeriodicity {
  double residual = 0.0;
  Eigen::RowVectorXd rotation;   // X in the angle frame at the seed
};
QuasiPeriodicity verify_quasiperiodicity(const TorusChart& chart, const VectorFieldExpr& x, std::size_t n_samples);

/// Uniform grid of N^p torus points (last angle fastest), reached by short
/// flows of Z_k / N from neighbouring grid points.
struct TorusGrid {
  std::size_t n = 0, p = 0, m = 0;
  std::vector<std::vector<double>> theta;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> jac;   // derivative of x0 -> x, row-major m x m (optional)
};
TorusGrid torus_grid(const TorusChart& chart, std::size_t n, bool with_jacobian, std::size_t threads = 0);

/// CSV with columns theta_1..theta_p, then the coordinates.
std::string grid_csv(const TorusGrid& grid, std::span<const std::string> coords);

/// Affine section through the seed, transverse to the torus: s(z) = x0 + P w
/// with P = pinv(dF(x0)), solved for F(s(z)) = z by Newton.
class Section {
 public:
  Section(std::vector<Expr> integrals, std::span<const double> x0);
  std::vector<double> at(std::span<const double> levels) const;
  /// ds/dz at the section point for the given levels (m x q).
  Eigen::MatrixXd tangent(std::span<const double> levels) const;
  const std::vector<double>& base_levels() const { return z0_; }
  std::size_t q() const { return z0_.size(); }
  Eigen::MatrixXd gradient(std::span<const double> x) const;

 private:
  std::vector<Expr> integrals_;
  Compiled f_, df_;
  std::vector<double> x0_, z0_;
  Eigen::MatrixXd p_;
};

/// Centered-difference steps in level space, scaled by |dF_j| and the torus size.
std::vector<double> level_steps(const TorusChart& chart);

/// Columns of E at each grid point: d x / d theta_k = Z_k, then
/// d x / d z_j = J(theta) s_j + sum_i (theta . dL/dz_j)_i X_i, for the
/// coordinates x(theta, z) = exp(theta . L(z)) s(z) with s the affine section.
/// Needs p + q = m.
struct LiouvilleFrames {
  TorusGrid grid;
  std::vector<Eigen::MatrixXd> e;
  std::vector<Eigen::MatrixXd> dl;   // dL/dz_j at the chart's torus
};
LiouvilleFrames liouville_frames(const TorusChart& chart, std::size_t n, std::size_t threads = 0);

/// Format helper shared by the CSV writers: 17 significant digits.
std::string fmt17(double v);

}  // namespace liouville
