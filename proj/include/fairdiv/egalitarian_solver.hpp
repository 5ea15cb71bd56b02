#pragma once

#include "fairdiv/core_model.hpp"

#include <string>

namespace fairdiv {

struct EqualityCertificate {
  bool pass = false;
  double max_gap = 0.0;  // max_{i,j} |U-bar_i / w_i - U-bar_j / w_j|
  std::string explanation;
};

struct EgalitarianSolution {
  Allocation allocation;
  UtilityProfile utilities;
  double level = 0.0;  // min_i U-bar_i / w_i
  EqualityCertificate equality;
  int pivots = 0;
  /// Number of distinct optimal vertices found; > 1 means the optimum is not unique.
  int optimal_vertices = 1;
};

struct InternalError : Error {
  using Error::Error;
};

/// Maximise t subject to sum_a u_ia z_ia >= t w_i sum_a u_ia, z feasible.
///
/// The LP is solved with DenseSimplex<double> and the first optimal vertex in
/// pivot order is returned, so at most n - 1 goods are split. Other optimal
/// vertices are only counted.
EgalitarianSolution solve_egalitarian(const DivisionProblem& problem, double tol = 1e-9);

EqualityCertificate equality_certificate(const DivisionProblem& problem, const Allocation& alloc,
                                         double tol = 1e-9);

}  // namespace fairdiv
