#pragma once

#include "fairdiv/core_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairdiv {

struct NashSolution {
  Allocation allocation;
  UtilityProfile utilities;
  double log_objective = 0.0;  // sum_i w_i ln U_i
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // KKT residual at the returned point
};

/// Raised when the fixed-point iteration does not reach an equilibrium.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double r, int iters)
      : Error(what), residual(r), iterations(iters) {}
  double residual;
  int iterations;
};

/// Thrown by equilibrium_prices for solutions that did not converge.
struct RefusalError : Error {
  using Error::Error;
};

inline constexpr int kDefaultMaxIterations = 200000;

/// Weighted Nash product maximizer, computed as the equilibrium of the linear
/// Fisher market with budgets w_i.
///
/// Proportional-response dynamics locate the equilibrium support; the support
/// is then reduced to a forest and prices and flows are solved exactly on it.
/// The result is accepted once every agent spends only on maximal
/// bang-per-buck goods, so converged solutions are exact up to rounding and
/// hold at most n + q - 1 positive shares.
NashSolution solve_nash(const DivisionProblem& problem, double tol = 1e-9,
                        int max_iter = kDefaultMaxIterations);

/// KKT residual of an allocation: worst relative gap between an agent's best
/// bang-per-buck and the rate at which they spend, plus budget mismatch.
double nash_residual(const DivisionProblem& problem, const Allocation& alloc);

struct PriceVector {
  Vector unit_prices;       // p_a = max_i w_i u_ia / U_i, sums to sum(w)
  Vector scaled_prices;     // p_a^B = B p_a / sum(w)
  Vector per_agent_budget;  // B w_i / sum(w)
  double budget = 0.0;
};

PriceVector equilibrium_prices(const DivisionProblem& problem, const NashSolution& solution,
                               double budget);

/// Prices for a fixed budget, given directly as p_a^B (for posted, rounded
/// prices). unit_prices are derived back from the scaled values.
PriceVector posted_prices(const DivisionProblem& problem, const Vector& scaled, double budget);

struct ClearingViolation {
  int clause = 0;  // 1: budget spent, 2: maximal bang-per-buck, 3: price within bid
  Eigen::Index agent = -1;
  Eigen::Index good = -1;
  std::string detail;
};

struct ClearingCertificate {
  bool pass = true;
  bool budgets_spent = true;
  bool max_bang_per_buck = true;
  bool within_bids = true;
  std::vector<ClearingViolation> violations;
};

ClearingCertificate verify_clearing(const DivisionProblem& problem, const Allocation& alloc,
                                    const PriceVector& prices, double tol = 1e-6);

struct DiscountRow {
  Eigen::Index good = -1;
  double price = 0.0;
  double bid = 0.0;
  std::optional<double> discount;  // (bid - price) / bid; empty when ruled out
  bool ruled_out() const { return !discount.has_value(); }
};

struct PurchaseStep {
  Eigen::Index good = -1;
  double share = 0.0;
  double cost = 0.0;
  double remaining = 0.0;  // budget left after this step
};

struct AgentPurchase {
  Eigen::Index agent = -1;
  double budget = 0.0;
  std::vector<DiscountRow> table;  // in good order
  std::vector<PurchaseStep> purchases;
  double remaining = 0.0;
};

struct PurchaseExplanation {
  std::vector<AgentPurchase> agents;
};

/// Greedy posted-price narrative: each agent rules out goods priced above
/// their bid, then buys the rest by decreasing discount (ties by good order)
/// until their budget runs out, taking a fraction of the last good.
PurchaseExplanation purchase_explanation(const DivisionProblem& problem,
                                         const PriceVector& prices);

}  // namespace fairdiv
