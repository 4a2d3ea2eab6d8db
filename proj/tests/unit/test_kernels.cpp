#include <cstring>
#include <random>

#include "doctest.h"
#include "liouville/compile.hpp"
#include "liouville/kernels.hpp"
#include "random_expr.hpp"

using namespace liouville;
namespace k = liouville::kernels;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("isa detection and override") {
  k::force_isa(k::Isa::Scalar);
  CHECK(k::active_isa() == k::Isa::Scalar);
  k::force_isa(std::nullopt);
  CHECK(k::active_isa() == k::detected_isa());
  MESSAGE("detected isa: " << k::to_string(k::detected_isa()));
}

TEST_CASE("batch evaluation: scalar and avx2 paths are bit-identical") {
  const std::vector<std::string> names{"x", "y", "z"};
  testsupport::ExprGen gen(99, names);
  for (std::size_t count : {1u, 3u, 4u, 63u, 64u, 65u, 257u, 1001u}) {
    std::vector<Expr> es;
    for (int n = 0; n < 12; ++n) es.push_back(gen(6));
    Compiled c(es, 3);
    std::vector<double> pts(3 * count);
    std::mt19937_64 rng(count);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : pts) v = u(rng);
    std::vector<double> a(es.size() * count), b(es.size() * count);
    c.eval_batch(pts.data(), count, count, a.data(), k::Isa::Scalar);
    c.eval_batch(pts.data(), count, count, b.data(), k::Isa::Avx2);
    CHECK(same_bits(a, b));
    // and the batch agrees with single-point evaluation
    for (std::size_t i = 0; i < count; i += 7) {
      std::vector<double> x{pts[i], pts[count + i], pts[2 * count + i]};
      std::vector<double> one = c.eval(x);
      for (std::size_t o = 0; o < es.size(); ++o) CHECK(std::memcmp(&one[o], &a[o * count + i], sizeof(double)) == 0);
    }
  }
}

TEST_CASE("batch evaluation: domain faults are reported by both paths") {
  std::vector<std::string> names{"x"};
  Compiled c(std::vector<Expr>{parse_expr("log(x) + 1/x", names)}, 1);
  std::vector<double> pts(100, 1.0), out(100);
  pts[70] = 0.0;
  for (k::Isa isa : {k::Isa::Scalar, k::Isa::Avx2}) {
    CHECK(k::eval_batch(c.tape(), pts.data(), 100, 100, out.data(), isa).has_value());
    CHECK_THROWS_AS(c.eval_batch(pts.data(), 100, 100, out.data(), isa), Error);
  }
  pts[70] = 2.0;
  pts[99] = -1.0;  // tail lane
  for (k::Isa isa : {k::Isa::Scalar, k::Isa::Avx2})
    CHECK(k::eval_batch(c.tape(), pts.data(), 100, 100, out.data(), isa).has_value());
}

TEST_CASE("reductions: scalar and avx2 paths are bit-identical") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1e3);
  for (std::size_t n : {0u, 1u, 5u, 8u, 31u, 1024u, 4099u}) {
    std::vector<double> v(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = g(rng);
      w[i] = g(rng) * 1e-3;
    }
    double s0 = k::sum(v.data(), n, k::Isa::Scalar), s1 = k::sum(v.data(), n, k::Isa::Avx2);
    double w0 = k::weighted_sum(v.data(), w.data(), n, k::Isa::Scalar);
    double w1 = k::weighted_sum(v.data(), w.data(), n, k::Isa::Avx2);
    double m0 = k::max_abs(v.data(), n, k::Isa::Scalar), m1 = k::max_abs(v.data(), n, k::Isa::Avx2);
    CHECK(std::memcmp(&s0, &s1, sizeof s0) == 0);
    CHECK(std::memcmp(&w0, &w1, sizeof w0) == 0);
    CHECK(std::memcmp(&m0, &m1, sizeof m0) == 0);
  }
  std::vector<double> nan{1.0, 2.0, std::nan(""), 3.0, 4.0};
  CHECK(std::isnan(k::max_abs(nan.data(), nan.size(), k::Isa::Scalar)));
  CHECK(std::isnan(k::max_abs(nan.data(), nan.size(), k::Isa::Avx2)));
}
