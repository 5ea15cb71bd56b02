#include "fairdiv/core_model.hpp"

#include <algorithm>
#include <cmath>

namespace fairdiv {

Vector DivisionProblem::weights() const {
  Vector w(num_agents());
  for (Eigen::Index i = 0; i < num_agents(); ++i) w(i) = agents[i].weight;
  return w;
}

Vector DivisionProblem::market_values() const {
  Vector m(num_goods());
  for (Eigen::Index a = 0; a < num_goods(); ++a) {
    if (!goods[a].market_value)
      throw StructuralError("good '" + goods[a].id + "' has no market value");
    m(a) = *goods[a].market_value;
  }
  return m;
}

bool DivisionProblem::has_market_values() const {
  return !goods.empty() &&
         std::all_of(goods.begin(), goods.end(),
                     [](const Good& g) { return g.market_value.has_value(); });
}

Eigen::Index DivisionProblem::agent_index(const std::string& id) const {
  for (std::size_t i = 0; i < agents.size(); ++i)
    if (agents[i].id == id) return static_cast<Eigen::Index>(i);
  throw StructuralError("unknown agent '" + id + "'");
}

Eigen::Index DivisionProblem::good_index(const std::string& id) const {
  for (std::size_t a = 0; a < goods.size(); ++a)
    if (goods[a].id == id) return static_cast<Eigen::Index>(a);
  throw StructuralError("unknown good '" + id + "'");
}

void Allocation::check_feasible(double tol) const {
  for (Eigen::Index a = 0; a < shares_.cols(); ++a) {
    for (Eigen::Index i = 0; i < shares_.rows(); ++i) {
      const double z = shares_(i, a);
      if (!std::isfinite(z) || z < -1e-12 || z > 1.0 + 1e-12)
        throw FeasibilityError("share of good #" + std::to_string(a) + " for agent #" +
                                   std::to_string(i) + " outside [0, 1]",
                               a);
    }
    const double col = shares_.col(a).sum();
    if (std::abs(col - 1.0) > tol)
      throw FeasibilityError("shares of good #" + std::to_string(a) + " sum to " +
                                 std::to_string(col) + ", not 1",
                             a);
  }
}

bool Allocation::is_feasible(double tol) const {
  try {
    check_feasible(tol);
    return true;
  } catch (const FeasibilityError&) {
    return false;
  }
}

Allocation Allocation::cleaned() const {
  Matrix z = shares_.cwiseMax(0.0).cwiseMin(1.0);
  for (Eigen::Index a = 0; a < z.cols(); ++a) {
    const double col = z.col(a).sum();
    if (col > 0.0) z.col(a) /= col;
  }
  return Allocation(std::move(z));
}

UtilityProfile evaluate(const DivisionProblem& problem, const Allocation& alloc) {
  if (alloc.num_agents() != problem.num_agents() || alloc.num_goods() != problem.num_goods() ||
      problem.utilities.rows() != problem.num_agents() ||
      problem.utilities.cols() != problem.num_goods())
    throw StructuralError("allocation is " + std::to_string(alloc.num_agents()) + "x" +
                          std::to_string(alloc.num_goods()) + " but problem is " +
                          std::to_string(problem.num_agents()) + "x" +
                          std::to_string(problem.num_goods()));
  try {
    alloc.check_feasible();
  } catch (const FeasibilityError& e) {
    const auto& good = problem.goods[static_cast<std::size_t>(e.good_index)];
    throw FeasibilityError("infeasible allocation for good '" + good.id + "': " + e.what(),
                           e.good_index);
  }

  UtilityProfile profile;
  profile.values = problem.utilities.cwiseProduct(alloc.shares()).rowwise().sum();
  const Vector totals = problem.totals();
  profile.normalized = Vector::Zero(profile.values.size());
  for (Eigen::Index i = 0; i < totals.size(); ++i)
    if (totals(i) > 0.0) profile.normalized(i) = profile.values(i) / totals(i);
  return profile;
}

int split_count(const Allocation& alloc, double tol) {
  int count = 0;
  for (Eigen::Index a = 0; a < alloc.num_goods(); ++a) {
    int fractional = 0;
    for (Eigen::Index i = 0; i < alloc.num_agents(); ++i) {
      const double z = alloc(i, a);
      if (z > tol && z < 1.0 - tol) ++fractional;
    }
    if (fractional >= 2) ++count;
  }
  return count;
}

int support_size(const Allocation& alloc, double tol) {
  return static_cast<int>((alloc.shares().array() > tol).count());
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; }) ||
         std::any_of(warnings.begin(), warnings.end(),
                     [&](const Violation& v) { return v.code == code; });
}

ValidationReport validate_problem(const DivisionProblem& problem) {
  ValidationReport report;
  const auto n = problem.num_agents();
  const auto q = problem.num_goods();
  if (n == 0) report.violations.push_back({"no-agents", "problem has no agents"});
  if (q == 0) report.violations.push_back({"no-goods", "problem has no goods"});
  if (problem.utilities.rows() != n || problem.utilities.cols() != q) {
    report.violations.push_back(
        {"dimension-mismatch", "utility matrix is " + std::to_string(problem.utilities.rows()) +
                                   "x" + std::to_string(problem.utilities.cols()) +
                                   ", expected " + std::to_string(n) + "x" + std::to_string(q)});
    return report;
  }
  for (const auto& agent : problem.agents)
    if (!(agent.weight > 0.0) || !std::isfinite(agent.weight))
      report.violations.push_back(
          {"non-positive-weight", "agent '" + agent.id + "' has non-positive weight"});
  for (const auto& good : problem.goods)
    if (good.market_value && (!(*good.market_value >= 0.0) || !std::isfinite(*good.market_value)))
      report.violations.push_back(
          {"bad-market-value", "good '" + good.id + "' has a negative or non-finite market value"});

  bool any_zero = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool valued = false;
    for (Eigen::Index a = 0; a < q; ++a) {
      const double u = problem.utilities(i, a);
      if (!std::isfinite(u)) {
        report.violations.push_back({"non-finite-utility", "agent '" + problem.agents[i].id +
                                                               "' has a non-finite utility for '" +
                                                               problem.goods[a].id + "'"});
      } else if (u < 0.0) {
        report.violations.push_back({"negative-utility", "agent '" + problem.agents[i].id +
                                                             "' has negative utility for '" +
                                                             problem.goods[a].id + "'"});
      } else if (u > 0.0) {
        valued = true;
      } else {
        any_zero = true;
      }
    }
    if (!valued)
      report.violations.push_back(
          {"agent-has-no-valued-good", "agent '" + problem.agents[i].id + "' has no valued good"});
  }
  if (any_zero)
    report.warnings.push_back(
        {"zero-utility", "some utilities are zero; egalitarian equality may degrade to max-min"});
  return report;
}

void require_valid(const DivisionProblem& problem) {
  const auto report = validate_problem(problem);
  if (report.ok()) return;
  const auto& first = report.violations.front();
  if (first.code == "dimension-mismatch" || first.code == "no-agents" || first.code == "no-goods")
    throw StructuralError(first.message);
  throw ModelError(first.message);
}

}  // namespace fairdiv
