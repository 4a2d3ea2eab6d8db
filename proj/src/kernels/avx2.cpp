// Compiled with -mavx2 (no -mfma): every lane performs exactly the IEEE
// operation sequence of the scalar reference.

#include <cmath>

#include "liouville/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace liouville::kernels::detail {

#if defined(__AVX2__)

bool avx2_compiled() { return true; }

namespace {

template <class F>
inline __m256d per_lane(__m256d a, F f) {
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, a);
  for (double& t : tmp) t = f(t);
  return _mm256_load_pd(tmp);
}

inline __m256d ipow4(__m256d b, long n) {
  __m256d r = _mm256_set1_pd(1.0);
  unsigned long k = n < 0 ? static_cast<unsigned long>(-n) : static_cast<unsigned long>(n);
  while (k != 0) {
    if (k & 1UL) r = _mm256_mul_pd(r, b);
    b = _mm256_mul_pd(b, b);
    k >>= 1;
  }
  return n < 0 ? _mm256_div_pd(_mm256_set1_pd(1.0), r) : r;
}

inline bool any(__m256d mask) { return _mm256_movemask_pd(mask) != 0; }

}  // namespace

DomainFault eval_block_avx2(const Tape& tape, const double* points, std::size_t stride, std::size_t first,
                            std::size_t n, double* out, double* regs) {
  const std::size_t nv = n - n % 4;
  if (nv == 0) return eval_block_scalar(tape, points, stride, first, n, out, regs);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign = _mm256_set1_pd(-0.0);
  const std::size_t ninstr = tape.code.size();
  for (std::size_t k = 0; k < ninstr; ++k) {
    const Instr& in = tape.code[k];
    double* r = regs + k * kBlock;
    const double* ra = regs + static_cast<std::size_t>(in.a) * kBlock;
    const double* rb = regs + static_cast<std::size_t>(in.b) * kBlock;
    for (std::size_t i = 0; i < nv; i += 4) {
      __m256d v;
      switch (in.op) {
        case TapeOp::Const: v = _mm256_set1_pd(in.imm); break;
        case TapeOp::Var:
          v = _mm256_loadu_pd(points + static_cast<std::size_t>(in.ipow) * stride + first + i);
          break;
        case TapeOp::Neg: v = _mm256_xor_pd(_mm256_loadu_pd(ra + i), sign); break;
        case TapeOp::Add: v = _mm256_add_pd(_mm256_loadu_pd(ra + i), _mm256_loadu_pd(rb + i)); break;
        case TapeOp::Sub: v = _mm256_sub_pd(_mm256_loadu_pd(ra + i), _mm256_loadu_pd(rb + i)); break;
        case TapeOp::Mul: v = _mm256_mul_pd(_mm256_loadu_pd(ra + i), _mm256_loadu_pd(rb + i)); break;
        case TapeOp::Div: {
          __m256d b = _mm256_loadu_pd(rb + i);
          if (any(_mm256_cmp_pd(b, zero, _CMP_EQ_OQ))) return k;
          v = _mm256_div_pd(_mm256_loadu_pd(ra + i), b);
          break;
        }
        case TapeOp::PowI: {
          __m256d a = _mm256_loadu_pd(ra + i);
          if (in.ipow < 0 && any(_mm256_cmp_pd(a, zero, _CMP_EQ_OQ))) return k;
          v = ipow4(a, in.ipow);
          break;
        }
        case TapeOp::Sin: v = per_lane(_mm256_loadu_pd(ra + i), [](double t) { return std::sin(t); }); break;
        case TapeOp::Cos: v = per_lane(_mm256_loadu_pd(ra + i), [](double t) { return std::cos(t); }); break;
        case TapeOp::Exp: v = per_lane(_mm256_loadu_pd(ra + i), [](double t) { return std::exp(t); }); break;
        case TapeOp::Log: {
          __m256d a = _mm256_loadu_pd(ra + i);
          if (any(_mm256_cmp_pd(a, zero, _CMP_NGT_UQ))) return k;
          v = per_lane(a, [](double t) { return std::log(t); });
          break;
        }
        case TapeOp::Sqrt: {
          __m256d a = _mm256_loadu_pd(ra + i);
          if (any(_mm256_cmp_pd(a, zero, _CMP_NGE_UQ))) return k;
          v = _mm256_sqrt_pd(a);
          break;
        }
        default: v = zero; break;
      }
      _mm256_storeu_pd(r + i, v);
    }
  }
  for (std::size_t o = 0; o < tape.outputs.size(); ++o) {
    const double* r = regs + static_cast<std::size_t>(tape.outputs[o]) * kBlock;
    double* dst = out + o * stride + first;
    for (std::size_t i = 0; i < nv; i += 4) _mm256_storeu_pd(dst + i, _mm256_loadu_pd(r + i));
  }
  if (nv < n) return eval_block_scalar(tape, points, stride, first + nv, n - nv, out, regs);
  return std::nullopt;
}

double weighted_sum_avx2(const double* v, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(v + i), _mm256_loadu_pd(w + i)));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) s = s + v[i] * w[i];
  return s;
}

double sum_avx2(const double* v, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + i));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) s = s + v[i];
  return s;
}

double max_abs_avx2(const double* v, std::size_t n) {
  std::size_t i = 0;
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d m = _mm256_setzero_pd();
  bool nan = false;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_and_pd(_mm256_loadu_pd(v + i), mask);
    nan = nan || any(_mm256_cmp_pd(a, a, _CMP_UNORD_Q));
    m = _mm256_max_pd(m, a);
  }
  if (nan) return std::nan("");
  alignas(32) double lane[4];
  _mm256_store_pd(lane, m);
  double r = std::fmax(std::fmax(lane[0], lane[1]), std::fmax(lane[2], lane[3]));
  double tail = max_abs_scalar(v + i, n - i);
  if (std::isnan(tail)) return tail;
  return std::fmax(r, tail);
}

#else

bool avx2_compiled() { return false; }

DomainFault eval_block_avx2(const Tape& tape, const double* points, std::size_t stride, std::size_t first,
                            std::size_t n, double* out, double* regs) {
  return eval_block_scalar(tape, points, stride, first, n, out, regs);
}
double weighted_sum_avx2(const double* v, const double* w, std::size_t n) { return weighted_sum_scalar(v, w, n); }
double sum_avx2(const double* v, std::size_t n) { return sum_scalar(v, n); }
double max_abs_avx2(const double* v, std::size_t n) { return max_abs_scalar(v, n); }

#endif

}  // namespace liouville::kernels::detail
