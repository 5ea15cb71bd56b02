#pragma once

#include "fairdiv/core_model.hpp"
#include "fairdiv/rating_model.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace fairdiv {

/// Relative tolerance on own-bundle value used by the envy check.
inline constexpr double kEnvyRelTol = 1e-7;

struct FairShareRow {
  double utility = 0.0;
  double threshold = 0.0;  // w_i / sum(w) * sum_a u_ia
  bool pass = false;
};

struct EfficiencyResult {
  bool pass = true;
  /// Sum of normalized utilities gained by the best dominating allocation.
  double improvement = 0.0;
  /// z' - z for a dominating z' when pass is false.
  std::optional<Matrix> improving_direction;
};

struct MvGainRow {
  double market_value = 0.0;
  double market_value_per_weight = 0.0;
  std::optional<double> avg_standardized_utility;
  std::optional<double> gain;
};

struct AuditReport {
  Matrix envy_matrix;  // (i, j) = u_i . z_j
  bool envy_pass = true;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> envious_pairs;
  std::vector<FairShareRow> fair_share;
  bool fair_share_pass = true;
  EfficiencyResult efficiency;
  std::vector<MvGainRow> mv_gain_table;  // empty without a rating context
  std::optional<bool> ordering_pass;     // set only with a rating context
  int split_count = 0;
};

AuditReport audit(const DivisionProblem& problem, const Allocation& alloc,
                  const std::optional<RatingContext>& ratings = std::nullopt, double tol = 1e-9);

Matrix envy_matrix(const DivisionProblem& problem, const Allocation& alloc);

EfficiencyResult check_efficiency(const DivisionProblem& problem, const Allocation& alloc,
                                  double tol = 1e-9);

/// Pairwise check that mu_i / w_i orders agents opposite to u-bar_i and gain.
bool market_value_ordering(const std::vector<BundleMetrics>& rows, const Vector& weights);

using FrontierPoint = std::pair<double, double>;  // (U_1, U_2)

/// Pareto frontier of a two-agent problem, from "all to agent 2" to "all to
/// agent 1". Goods with equal utility ratios move together.
std::vector<FrontierPoint> frontier_2agent(const DivisionProblem& problem);

/// Point where the frontier crosses U_1 = U_2.
FrontierPoint equal_utility_point(const std::vector<FrontierPoint>& frontier);

}  // namespace fairdiv
