#pragma once

#include <string>
#include <vector>

#include "liouville/torusflow.hpp"

namespace liouville {

/// A tensor pulled into the Liouville frame (theta, z) on a uniform angle
/// grid and averaged by the trapezoid rule.
struct TorusAverage {
  std::string tensor_id;
  std::size_t up = 0, down = 0, m = 0;
  std::size_t n = 0;                            // grid points per angle
  std::vector<std::vector<double>> frame;       // frame components per grid point
  std::vector<double> mean;                     // averaged frame components
  std::vector<double> deviation_field;          // max |G - mean| per grid point
  double deviation = 0.0;                       // max of deviation_field
  double fourier = 0.0;                         // largest nonzero-frequency coefficient
};

/// Frame components G'(theta) from ambient components at each grid point:
/// upper indices transform with E^{-1}, lower ones with E.
TorusAverage torus_average(const std::vector<std::vector<double>>& ambient, std::size_t up, std::size_t down,
                           const LiouvilleFrames& frames, std::size_t threads = 0);
TorusAverage torus_average(const TensorField& g, const TorusChart& chart, std::size_t n = 32,
                           std::size_t threads = 0);
TorusAverage torus_average(const TensorField& g, const LiouvilleFrames& frames, std::size_t threads = 0);

/// The averaged tensor pushed back to ambient coordinates at every grid point.
std::vector<std::vector<double>> to_ambient(const TorusAverage& avg, const LiouvilleFrames& frames);

/// Same components re-expressed for the chart with lattice U L.
std::vector<double> change_basis(const TorusAverage& avg, std::size_t p, const Eigen::MatrixXi& u);

struct ConservationOptions {
  std::size_t grid = 32;
  std::size_t threads = 0;
  bool first_field_only = false;   // hypothesis on X_1 alone; needs a completely irrational X_1
};

struct ConservationReport {
  TorusAverage average;
  std::vector<double> lie;     // max |L_{X_i} G| on the torus samples
  double tol = 1e-6;
  bool pass = false;
};

/// Throws HypothesisViolated when some L_{X_i} G already exceeds the
/// hypothesis tolerance on the torus.
ConservationReport conservation_check(const TensorField& g, const SystemSpec& spec, const TorusChart& chart,
                                      const ConservationOptions& opt = {});

struct ConformalReport {
  std::vector<double> f_max;        // max |f_i| over the torus
  std::vector<double> g_max;        // max |g_j| for the generators Z_j
  double residual_fields = 0.0;     // max |L_{X_i} G - f_i G|
  double residual_generators = 0.0; // max |L_{Z_j} G - g_j G|
  bool pass = false;
};

/// Throws NotConformal when no smooth scalar f_i fits L_{X_i} G = f_i G.
ConformalReport conformal_check(const TensorField& g, const SystemSpec& spec, const TorusChart& chart,
                                const ConservationOptions& opt = {});

struct RationalApprox {
  std::size_t component = 0;   // ratio of component `component` to the reference
  long num = 0, den = 1;
  double error = 0.0;
};

struct IrrationalityReport {
  std::vector<double> rotation;
  std::size_t reference = 0;               // index of the component used as denominator
  std::vector<RationalApprox> convergents; // all convergents with den <= max_den
  std::vector<RationalApprox> resonances;  // those with error < 1e-9 / den^2
  bool resonant = false;
};

IrrationalityReport irrationality_probe(std::span<const double> rotation, long max_den = 10000);
IrrationalityReport irrationality_probe(const TorusChart& chart, const VectorFieldExpr& x1, long max_den = 10000);

/// grid CSV of the deviation field: theta_1..theta_p, deviation
std::string deviation_csv(const TorusAverage& avg, const TorusGrid& grid);

}  // namespace liouville
