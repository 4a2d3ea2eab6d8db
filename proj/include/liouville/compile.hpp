#pragma once

#include <span>
#include <vector>

#include "liouville/expr.hpp"
#include "liouville/kernels.hpp"

namespace liouville {

/// A set of expressions lowered to one straight-line tape with shared
/// subexpressions. Immutable once built; evaluation is reentrant.
class Compiled {
 public:
  Compiled() = default;
  Compiled(std::span<const Expr> outputs, std::size_t n_vars);

  std::size_t n_outputs() const { return tape_.outputs.size(); }
  std::size_t n_vars() const { return tape_.n_vars; }
  const kernels::Tape& tape() const { return tape_; }

  /// Throws Error(Domain) naming the subtree whose domain check failed.
  void eval(std::span<const double> x, std::span<double> out) const;
  std::vector<double> eval(std::span<const double> x) const;

  /// Coordinate-major batch; see kernels::eval_batch.
  void eval_batch(const double* points, std::size_t stride, std::size_t count, double* out) const;
  void eval_batch(const double* points, std::size_t stride, std::size_t count, double* out,
                  kernels::Isa isa) const;

 private:
  [[noreturn]] void fail(std::size_t instr) const;

  kernels::Tape tape_;
  std::vector<Expr> source_;
};

}  // namespace liouville
