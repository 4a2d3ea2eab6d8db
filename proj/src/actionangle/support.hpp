#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "liouville/torusflow.hpp"

namespace liouville::detail {

std::vector<std::vector<double>> torus_points(const TorusChart& chart, std::size_t n_samples);
Compiled gradient_tape(std::span<const Expr> fs, std::size_t m);
/// rows x m matrix of gradients from a tape built by gradient_tape.
Eigen::MatrixXd gradients(const Compiled& c, std::size_t rows, std::size_t m, std::span<const double> x);
Eigen::MatrixXd matrix_at(const std::vector<double>& rowmajor, std::size_t m);
double dist(std::span<const double> a, std::span<const double> b);

}  // namespace liouville::detail
