#pragma once

// Data-parallel inner loops: batched evaluation of compiled expression tapes
// and fixed-order reductions. Every kernel has a scalar reference and an AVX2
// variant; the two are bit-identical by construction (same operation order,
// no contraction, transcendental lanes evaluated through libm in both).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace liouville::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// What the CPU supports.
Isa detected_isa();
/// What the dispatcher uses: the detected ISA unless overridden.
Isa active_isa();
/// Force a particular path (tests); nullopt restores detection.
void force_isa(std::optional<Isa> isa);

enum class TapeOp : std::uint8_t {
  Const,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  PowI,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
};

/// One SSA instruction; its result lives in the register with the same index
/// as the instruction.
struct Instr {
  TapeOp op;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double imm = 0.0;    // Const value
  long ipow = 0;       // PowI exponent; Var index for Var
};

/// Straight-line program computing several outputs from a coordinate vector.
struct Tape {
  std::vector<Instr> code;
  std::vector<std::uint32_t> outputs;
  std::size_t n_vars = 0;
};

/// Result of a kernel run: index of the first instruction whose domain check
/// failed (division by zero, log of non-positive, sqrt of negative).
using DomainFault = std::optional<std::size_t>;

/// Evaluate at one point. `scratch` is resized as needed.
DomainFault eval_point(const Tape& tape, std::span<const double> x, std::span<double> out,
                       std::vector<double>& scratch);

/// Evaluate at `count` points stored coordinate-major: coordinate a of point i
/// is points[a * stride + i]. Output o of point i goes to out[o * stride + i].
DomainFault eval_batch(const Tape& tape, const double* points, std::size_t stride, std::size_t count,
                       double* out, Isa isa);
inline DomainFault eval_batch(const Tape& tape, const double* points, std::size_t stride, std::size_t count,
                              double* out) {
  return eval_batch(tape, points, stride, count, out, active_isa());
}

/// sum_i w[i] * v[i], accumulated in four interleaved lanes combined as
/// (l0 + l1) + (l2 + l3), then the tail in index order.
double weighted_sum(const double* v, const double* w, std::size_t n, Isa isa);
double sum(const double* v, std::size_t n, Isa isa);
double max_abs(const double* v, std::size_t n, Isa isa);

inline double weighted_sum(std::span<const double> v, std::span<const double> w) {
  return weighted_sum(v.data(), w.data(), v.size(), active_isa());
}
inline double sum(std::span<const double> v) { return sum(v.data(), v.size(), active_isa()); }
inline double max_abs(std::span<const double> v) { return max_abs(v.data(), v.size(), active_isa()); }

namespace detail {
// Lane-block size for batched evaluation; multiple of 4.
inline constexpr std::size_t kBlock = 64;

DomainFault eval_block_scalar(const Tape& tape, const double* points, std::size_t stride, std::size_t first,
                              std::size_t n, double* out, double* regs);
DomainFault eval_block_avx2(const Tape& tape, const double* points, std::size_t stride, std::size_t first,
                            std::size_t n, double* out, double* regs);
double weighted_sum_scalar(const double* v, const double* w, std::size_t n);
double weighted_sum_avx2(const double* v, const double* w, std::size_t n);
double sum_scalar(const double* v, std::size_t n);
double sum_avx2(const double* v, std::size_t n);
double max_abs_scalar(const double* v, std::size_t n);
double max_abs_avx2(const double* v, std::size_t n);
bool avx2_compiled();
}  // namespace detail

}  // namespace liouville::kernels
