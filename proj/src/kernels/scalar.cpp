#include <cmath>

#include "liouville/kernels.hpp"

namespace liouville::kernels::detail {

namespace {

double ipow(double b, long n) {
  double r = 1.0;
  unsigned long k = n < 0 ? static_cast<unsigned long>(-n) : static_cast<unsigned long>(n);
  while (k != 0) {
    if (k & 1UL) r = r * b;
    b = b * b;
    k >>= 1;
  }
  return n < 0 ? 1.0 / r : r;
}

}  // namespace

DomainFault eval_block_scalar(const Tape& tape, const double* points, std::size_t stride, std::size_t first,
                              std::size_t n, double* out, double* regs) {
  const std::size_t ninstr = tape.code.size();
  for (std::size_t k = 0; k < ninstr; ++k) {
    const Instr& in = tape.code[k];
    double* r = regs + k * kBlock;
    const double* ra = regs + static_cast<std::size_t>(in.a) * kBlock;
    const double* rb = regs + static_cast<std::size_t>(in.b) * kBlock;
    switch (in.op) {
      case TapeOp::Const:
        for (std::size_t i = 0; i < n; ++i) r[i] = in.imm;
        break;
      case TapeOp::Var: {
        const double* src = points + static_cast<std::size_t>(in.ipow) * stride + first;
        for (std::size_t i = 0; i < n; ++i) r[i] = src[i];
        break;
      }
      case TapeOp::Neg:
        for (std::size_t i = 0; i < n; ++i) r[i] = -ra[i];
        break;
      case TapeOp::Add:
        for (std::size_t i = 0; i < n; ++i) r[i] = ra[i] + rb[i];
        break;
      case TapeOp::Sub:
        for (std::size_t i = 0; i < n; ++i) r[i] = ra[i] - rb[i];
        break;
      case TapeOp::Mul:
        for (std::size_t i = 0; i < n; ++i) r[i] = ra[i] * rb[i];
        break;
      case TapeOp::Div:
        for (std::size_t i = 0; i < n; ++i) {
          if (rb[i] == 0.0) return k;
          r[i] = ra[i] / rb[i];
        }
        break;
      case TapeOp::PowI:
        for (std::size_t i = 0; i < n; ++i) {
          if (in.ipow < 0 && ra[i] == 0.0) return k;
          r[i] = ipow(ra[i], in.ipow);
        }
        break;
      case TapeOp::Sin:
        for (std::size_t i = 0; i < n; ++i) r[i] = std::sin(ra[i]);
        break;
      case TapeOp::Cos:
        for (std::size_t i = 0; i < n; ++i) r[i] = std::cos(ra[i]);
        break;
      case TapeOp::Exp:
        for (std::size_t i = 0; i < n; ++i) r[i] = std::exp(ra[i]);
        break;
      case TapeOp::Log:
        for (std::size_t i = 0; i < n; ++i) {
          if (!(ra[i] > 0.0)) return k;
          r[i] = std::log(ra[i]);
        }
        break;
      case TapeOp::Sqrt:
        for (std::size_t i = 0; i < n; ++i) {
          if (!(ra[i] >= 0.0)) return k;
          r[i] = std::sqrt(ra[i]);
        }
        break;
    }
  }
  for (std::size_t o = 0; o < tape.outputs.size(); ++o) {
    const double* r = regs + static_cast<std::size_t>(tape.outputs[o]) * kBlock;
    double* dst = out + o * stride + first;
    for (std::size_t i = 0; i < n; ++i) dst[i] = r[i];
  }
  return std::nullopt;
}

double weighted_sum_scalar(const double* v, const double* w, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t k = 0; k < 4; ++k) lane[k] = lane[k] + v[i + k] * w[i + k];
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) s = s + v[i] * w[i];
  return s;
}

double sum_scalar(const double* v, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t k = 0; k < 4; ++k) lane[k] = lane[k] + v[i + k];
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) s = s + v[i];
  return s;
}

double max_abs_scalar(const double* v, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::fabs(v[i]);
    if (a > m || std::isnan(a)) m = a;
    if (std::isnan(m)) return m;
  }
  return m;
}

}  // namespace liouville::kernels::detail
