#include "liouville/compile.hpp"

#include <bit>
#include <map>
#include <tuple>

namespace liouville {

namespace {

using Key = std::tuple<int, std::uint32_t, std::uint32_t, std::uint64_t, long>;

struct Lowering {
  kernels::Tape& tape;
  std::vector<Expr>& source;
  std::map<Key, std::uint32_t> seen;

  std::uint32_t emit(kernels::TapeOp op, std::uint32_t a, std::uint32_t b, double imm, long ipow, const Expr& src) {
    Key key{static_cast<int>(op), a, b, std::bit_cast<std::uint64_t>(imm), ipow};
    auto it = seen.find(key);
    if (it != seen.end()) return it->second;
    auto idx = static_cast<std::uint32_t>(tape.code.size());
    tape.code.push_back({op, a, b, imm, ipow});
    source.push_back(src);
    seen.emplace(key, idx);
    return idx;
  }

  std::uint32_t lower(const Expr& e) {
    using kernels::TapeOp;
    switch (e.op()) {
      case Op::Const: return emit(TapeOp::Const, 0, 0, e.value().get_d(), 0, e);
      case Op::Named:
        if (e.imaginary()) throw Error(ErrorKind::Domain, "imaginary constant " + e.name() + " in a real evaluation");
        return emit(TapeOp::Const, 0, 0, e.named_value(), 0, e);
      case Op::Var:
        if (e.var() >= tape.n_vars) throw Error(ErrorKind::InvalidArgument, "variable " + e.name() + " out of range");
        return emit(TapeOp::Var, 0, 0, 0.0, static_cast<long>(e.var()), e);
      case Op::Neg: return emit(TapeOp::Neg, lower(e.arg()), 0, 0.0, 0, e);
      case Op::Sin: return emit(TapeOp::Sin, lower(e.arg()), 0, 0.0, 0, e);
      case Op::Cos: return emit(TapeOp::Cos, lower(e.arg()), 0, 0.0, 0, e);
      case Op::Exp: return emit(TapeOp::Exp, lower(e.arg()), 0, 0.0, 0, e);
      case Op::Log: return emit(TapeOp::Log, lower(e.arg()), 0, 0.0, 0, e);
      case Op::Sqrt: return emit(TapeOp::Sqrt, lower(e.arg()), 0, 0.0, 0, e);
      case Op::Pow: return emit(TapeOp::PowI, lower(e.arg()), 0, 0.0, e.exponent(), e);
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        std::uint32_t a = lower(e.lhs());
        std::uint32_t b = lower(e.rhs());
        TapeOp op = e.op() == Op::Add   ? TapeOp::Add
                    : e.op() == Op::Sub ? TapeOp::Sub
                    : e.op() == Op::Mul ? TapeOp::Mul
                                        : TapeOp::Div;
        return emit(op, a, b, 0.0, 0, e);
      }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown node");
  }
};

}  // namespace

Compiled::Compiled(std::span<const Expr> outputs, std::size_t n_vars) {
  tape_.n_vars = n_vars;
  Lowering low{tape_, source_, {}};
  for (const Expr& e : outputs) tape_.outputs.push_back(low.lower(e));
}

void Compiled::fail(std::size_t instr) const {
  const Expr& e = source_[instr];
  std::string what = e.op() == Op::Div ? "division by zero" : e.op() == Op::Log ? "log of non-positive value"
                     : e.op() == Op::Sqrt ? "sqrt of negative value" : "zero raised to a negative power";
  throw Error(ErrorKind::Domain, what + " in " + print(e));
}

void Compiled::eval(std::span<const double> x, std::span<double> out) const {
  if (x.size() != tape_.n_vars) throw Error(ErrorKind::InvalidArgument, "point dimension mismatch");
  thread_local std::vector<double> scratch;
  if (auto f = kernels::eval_point(tape_, x, out, scratch)) fail(*f);
}

std::vector<double> Compiled::eval(std::span<const double> x) const {
  std::vector<double> out(n_outputs());
  eval(x, out);
  return out;
}

void Compiled::eval_batch(const double* points, std::size_t stride, std::size_t count, double* out) const {
  eval_batch(points, stride, count, out, kernels::active_isa());
}

void Compiled::eval_batch(const double* points, std::size_t stride, std::size_t count, double* out,
                          kernels::Isa isa) const {
  if (auto f = kernels::eval_batch(tape_, points, stride, count, out, isa)) fail(*f);
}

}  // namespace liouville
