#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "liouville/torusflow.hpp"

namespace liouville {

using Structure = std::variant<Structure2Form, PoissonBivector>;

enum class ActionMode { Symplectic, Presymplectic, Poisson };
std::string_view to_string(ActionMode mode);

/// Throws PrimitiveMismatch unless d alpha = omega, symbolically or at every
/// sample within tol. Returns the largest defect seen.
double check_primitive(std::span<const Expr> alpha, const Structure2Form& omega,
                       std::span<const std::vector<double>> samples, double tol = 1e-9);

/// Throws DimensionBound when p > m - rank(omega)/2 at the seed.
void check_dimension_bound(std::size_t p, const Structure2Form& omega, std::span<const double> seed);

struct MineurResult {
  double value = 0.0;
  double error = 0.0;                       // |I(n) - I(n/2)| of the last panel doubling
  double closure = 0.0;                     // distance between the traced cycle's ends
  std::vector<std::vector<double>> cycle;   // polyline through the quadrature nodes
};

/// Integral of alpha over the orbit of Z_k (one period), composite
/// 16-point Gauss-Legendre with panel doubling.
MineurResult mineur_integral(const TorusChart& chart, std::span<const Expr> alpha, std::size_t k,
                             const Structure2Form& omega);
inline double mineur_action(const TorusChart& chart, std::span<const Expr> alpha, std::size_t k,
                            const Structure2Form& omega) {
  return mineur_integral(chart, alpha, k, omega).value;
}

struct ActionProfile {
  std::string torus_id;
  std::vector<double> levels;
  std::vector<double> mu;
  std::vector<double> quad_error;
  std::vector<std::vector<std::vector<double>>> cycles;
  std::vector<double> residuals;   // filled by verify_action, empty otherwise
  ActionMode mode = ActionMode::Symplectic;
};

/// Mineur actions for every lattice generator of the chart.
ActionProfile action_profile(const TorusChart& chart, std::span<const Expr> alpha, const Structure2Form& omega,
                             std::string torus_id);

/// torus_id, mode, F_1..F_q, mu_1..mu_p, r_1..r_p
std::string profile_csv(std::span<const ActionProfile> profiles);

struct LeafwiseOptions {
  std::size_t panels = 2;     // 8-point Gauss-Legendre panels per path leg
  bool check_paths = true;    // also integrate along an L-shaped path when q >= 2
  double path_tol = 1e-6;
};

struct LeafwiseResult {
  std::vector<double> mu;
  Eigen::MatrixXd lattice;     // lattice at the target, continued from the reference basis
  double path_discrepancy = 0.0;
};

/// mu(y) = integral of rho_k = sum_i L_ki dH_i along a path in the section
/// from the reference torus (mu = 0) to the torus at `levels`.
LeafwiseResult leafwise_action(const TorusChart& reference, std::span<const Expr> hamiltonians,
                               std::span<const double> levels, const LeafwiseOptions& opt = {});
std::vector<LeafwiseResult> leafwise_action(const TorusChart& reference, std::span<const TorusChart> family,
                                            std::span<const Expr> hamiltonians, const LeafwiseOptions& opt = {});

/// Action vector as a function of the invariant levels, in a basis continued
/// from the reference chart's lattice.
using ActionMap = std::function<std::vector<double>(std::span<const double> levels)>;
ActionMap leafwise_map(const TorusChart& reference, std::vector<Expr> hamiltonians);
ActionMap mineur_map(const TorusChart& reference, std::vector<Expr> alpha, Structure2Form omega);

struct ActionResidual {
  std::vector<double> residual;   // per generator
  double tol = 1e-4;
  bool pass = false;
};

/// r_k = max over torus samples of |Z_k _| omega + d mu_k| (2-form) or
/// |Z_k - X_{mu_k}| (Poisson).
ActionResidual verify_action(const TorusChart& chart, std::span<const Expr> mu, const Structure& s,
                             std::size_t n_samples = 64);
/// Same with d mu from centered differences over neighbouring tori.
ActionResidual verify_action(const TorusChart& chart, const ActionMap& mu, const Structure& s,
                             std::size_t n_samples = 64);

/// max |omega(X_i, X_j)| (or |{H_i, H_j}| for a Poisson structure) over about
/// n_samples torus points.
double isotropy_defect(const TorusChart& chart, const Structure& s, std::span<const Expr> hamiltonians,
                       std::size_t n_samples = 1000);

enum class NormalMode { General2Form, AlmostSymplectic, Symplectic, Superintegrable, Poisson };
std::string_view to_string(NormalMode mode);
NormalMode parse_normal_mode(std::string_view s);

struct NormalFormReport {
  NormalMode mode = NormalMode::General2Form;
  std::size_t p = 0, q = 0;
  Eigen::MatrixXd frame_structure;   // omega or Pi in (theta, F) coordinates, averaged over the torus
  double invariance = 0.0;           // largest variation over the torus
  double isotropy = 0.0;             // theta-theta block
  Eigen::MatrixXd action_jacobian;   // d mu / dF, p x q
  Eigen::MatrixXd magnetic;          // b block: F-F for 2-forms, complement block otherwise
  double magnetic_norm = 0.0;
  double closedness = 0.0;           // max |d omega| on the torus
  Eigen::MatrixXd angle_shift;       // D = da/dw at the torus, p x q
  double residual = 0.0;             // distance to the target block form
};

struct NormalFormOptions {
  std::size_t grid = 8;
  std::size_t threads = 0;
};

NormalFormReport assemble_normal_form(const TorusChart& chart, const Structure& s, NormalMode mode,
                                      const NormalFormOptions& opt = {});

struct CoaffineSample {
  std::string torus_id;
  std::vector<double> levels;
  std::vector<double> mu;
};

struct CoaffineChart {
  std::vector<CoaffineSample> samples;
  std::size_t p = 0, q = 0;
  std::size_t rank = 0;
  std::vector<std::size_t> local_ranks;
  std::size_t degree() const { return p - rank; }
};

/// Numerical rank of the action map from differences to the nearest
/// neighbours of each sample; RankUnstable when the local ranks disagree.
CoaffineChart coaffine_chart(std::vector<CoaffineSample> samples, std::size_t q, double rank_tol = 1e-8);
CoaffineSample coaffine_sample(const TorusChart& chart, std::span<const Expr> alpha, const Structure2Form& omega,
                               std::string torus_id);

}  // namespace liouville
