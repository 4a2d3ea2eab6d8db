#include <algorithm>
#include <atomic>
#include <vector>

#include "liouville/kernels.hpp"

namespace liouville::kernels {

namespace {

std::atomic<int> g_override{-1};

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
#if defined(__x86_64__) || defined(__i386__)
  static const Isa isa = (detail::avx2_compiled() && __builtin_cpu_supports("avx2")) ? Isa::Avx2 : Isa::Scalar;
  return isa;
#else
  return Isa::Scalar;
#endif
}

Isa active_isa() {
  int o = g_override.load(std::memory_order_relaxed);
  if (o >= 0) return static_cast<Isa>(o);
  return detected_isa();
}

void force_isa(std::optional<Isa> isa) {
  if (isa && *isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

DomainFault eval_point(const Tape& tape, std::span<const double> x, std::span<double> out,
                       std::vector<double>& scratch) {
  scratch.resize(tape.code.size() * detail::kBlock);
  if (out.size() < tape.outputs.size()) return std::size_t{0};
  return detail::eval_block_scalar(tape, x.data(), 1, 0, 1, out.data(), scratch.data());
}

DomainFault eval_batch(const Tape& tape, const double* points, std::size_t stride, std::size_t count, double* out,
                       Isa isa) {
  std::vector<double> regs(tape.code.size() * detail::kBlock);
  for (std::size_t first = 0; first < count; first += detail::kBlock) {
    std::size_t n = std::min(detail::kBlock, count - first);
    DomainFault f = isa == Isa::Avx2
                        ? detail::eval_block_avx2(tape, points, stride, first, n, out, regs.data())
                        : detail::eval_block_scalar(tape, points, stride, first, n, out, regs.data());
    if (f) return f;
  }
  return std::nullopt;
}

double weighted_sum(const double* v, const double* w, std::size_t n, Isa isa) {
  return isa == Isa::Avx2 ? detail::weighted_sum_avx2(v, w, n) : detail::weighted_sum_scalar(v, w, n);
}

double sum(const double* v, std::size_t n, Isa isa) {
  return isa == Isa::Avx2 ? detail::sum_avx2(v, n) : detail::sum_scalar(v, n);
}

double max_abs(const double* v, std::size_t n, Isa isa) {
  return isa == Isa::Avx2 ? detail::max_abs_avx2(v, n) : detail::max_abs_scalar(v, n);
}

}  // namespace liouville::kernels
