#pragma once

#include "fairdiv/core_model.hpp"

#include <random>
#include <string>

namespace fairdiv::testing {

inline DivisionProblem make_problem(const Matrix& u, const Vector& weights = Vector()) {
  DivisionProblem p;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    p.agents.push_back({"a" + std::to_string(i), "", weights.size() ? weights(i) : 1.0});
  for (Eigen::Index a = 0; a < u.cols(); ++a) p.goods.push_back({"g" + std::to_string(a), "", {}});
  p.utilities = u;
  return p;
}

// Integer-valued utilities in [1, 20], occasionally zero but never a zero row.
inline Matrix random_utilities(std::mt19937_64& rng, Eigen::Index n, Eigen::Index q, bool allow_zero) {
  std::uniform_int_distribution<int> value(1, 20);
  std::bernoulli_distribution zero(allow_zero ? 0.2 : 0.0);
  Matrix u(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < q; ++a) u(i, a) = zero(rng) ? 0.0 : value(rng);
    if (u.row(i).sum() == 0.0) u(i, 0) = value(rng);
  }
  return u;
}

inline Matrix inheritance_bids() {
  Matrix u(3, 6);
  u << 170, 112, 123, 100, 80, 45,
       181, 132, 156, 61, 64, 36,
       200, 129, 140, 61, 64, 36;
  return u;
}

}  // namespace fairdiv::testing
