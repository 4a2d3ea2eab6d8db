#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "liouville/torusflow.hpp"

namespace testsupport {

// dx_1 ^ ... ^ dx_m as a fully covariant tensor.
inline liouville::TensorField volume_form(std::size_t m) {
  liouville::TensorField t(m, 0, m);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    int sign = 1;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (perm[i] > perm[j]) sign = -sign;
    t.at(perm) = liouville::Expr::constant(sign);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return t;
}

// Five tensors preserved by a Hamiltonian system with two commuting fields.
inline std::vector<std::pair<std::string, liouville::TensorField>> invariant_suite(const liouville::SystemSpec& s) {
  using liouville::TensorField;
  const std::size_t m = s.m();
  std::vector<std::pair<std::string, TensorField>> out;
  out.emplace_back("omega", s.omega->as_tensor());
  out.emplace_back("dH1*dH2", tensor_product(TensorField::differential(s.hamiltonians[0], m),
                                             TensorField::differential(s.hamiltonians[1], m)));
  out.emplace_back("X1*X2", tensor_product(TensorField::vector(s.fields[0]), TensorField::vector(s.fields[1])));
  out.emplace_back("volume", volume_form(m));
  out.emplace_back("X1*dH2", tensor_product(TensorField::vector(s.fields[0]),
                                            TensorField::differential(s.hamiltonians[1], m)));
  return out;
}

}  // namespace testsupport
