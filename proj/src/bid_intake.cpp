#include "fairdiv/bid_intake.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairdiv {

double BidSheet::total() const { return std::accumulate(bids.begin(), bids.end(), 0.0); }

RangeSuggestion suggest_ranges(const std::vector<double>& tentative_values, double spread) {
  return suggest_ranges(tentative_values, spread, spread);
}

RangeSuggestion suggest_ranges(const std::vector<double>& tentative_values, double lower_spread,
                               std::optional<double> upper_spread,
                               std::optional<double> budget_override) {
  if (lower_spread < 0.0 || lower_spread >= 1.0 || (upper_spread && *upper_spread < 0.0))
    throw Error("spread must lie in [0, 1)");
  RangeSuggestion out;
  out.ranges.reserve(tentative_values.size());
  for (double v : tentative_values) {
    if (!(v >= 0.0)) throw Error("tentative values must be non-negative");
    BidRange r;
    r.lower = v * (1.0 - lower_spread);
    if (upper_spread) r.upper = v * (1.0 + *upper_spread);
    out.ranges.push_back(r);
  }
  out.budget = budget_override ? *budget_override
                               : std::accumulate(tentative_values.begin(), tentative_values.end(), 0.0);
  return out;
}

ValidationReport validate_bids(const BidSheet& sheet, const std::vector<BidRange>& ranges,
                               double budget) {
  ValidationReport report;
  if (!ranges.empty() && ranges.size() != sheet.bids.size()) {
    report.violations.push_back({"dimension-mismatch", "sheet has " +
                                                           std::to_string(sheet.bids.size()) +
                                                           " bids but there are " +
                                                           std::to_string(ranges.size()) + " goods"});
    return report;
  }
  int at_upper = 0;
  for (std::size_t a = 0; a < sheet.bids.size(); ++a) {
    const double b = sheet.bids[a];
    const std::string where = "good #" + std::to_string(a);
    if (!std::isfinite(b) || b < 0.0) {
      report.violations.push_back({"negative-bid", "bid on " + where + " is negative"});
      continue;
    }
    if (ranges.empty()) continue;
    const auto& r = ranges[a];
    // Scaled sheets land on a bound only up to rounding.
    const auto dust = [](double bound) { return kRangeRelTol * std::max(1.0, std::abs(bound)); };
    if (b < r.lower - dust(r.lower))
      report.violations.push_back(
          {"below-range", "bid on " + where + " is below the lower bound " + std::to_string(r.lower)});
    else if (r.upper && b > *r.upper + dust(*r.upper))
      report.violations.push_back(
          {"above-range", "bid on " + where + " is above the upper bound " + std::to_string(*r.upper)});
    else if (r.upper && b >= *r.upper - dust(*r.upper))
      ++at_upper;
  }
  if (at_upper > 0)
    report.warnings.push_back({"upper-bound-bid", std::to_string(at_upper) +
                                                      " bid(s) placed on the upper bound; ties may "
                                                      "need breaking"});

  const double deficit = budget - sheet.total();
  if (std::abs(deficit) > kBudgetRelTol * std::abs(budget))
    report.violations.push_back(
        {"budget-mismatch", "bids sum to " + std::to_string(sheet.total()) + ", budget is " +
                                std::to_string(budget) + " (deficit " + std::to_string(deficit) + ")"});
  return report;
}

BidSheet scale_bids_to_budget(const BidSheet& sheet, double budget) {
  const double sum = sheet.total();
  if (!(sum > 0.0)) throw ScalingError("cannot scale an all-zero bid sheet");
  BidSheet out = sheet;
  out.budget = budget;
  if (sum == budget) return out;
  const double factor = budget / sum;
  for (double& b : out.bids) b *= factor;
  return out;
}

ScaledSheet scale_bids_to_budget(const BidSheet& sheet, double budget,
                                 const std::vector<BidRange>& ranges) {
  ScaledSheet out{scale_bids_to_budget(sheet, budget), {}};
  out.range_report = validate_bids(out.sheet, ranges, budget);
  return out;
}

DivisionProblem bids_to_utilities(const std::vector<BidSheet>& sheets,
                                  const std::vector<Agent>& agents,
                                  const std::vector<Good>& goods) {
  DivisionProblem problem;
  problem.agents = agents;
  problem.goods = goods;
  const auto n = static_cast<Eigen::Index>(agents.size());
  const auto q = static_cast<Eigen::Index>(goods.size());
  problem.utilities = Matrix::Zero(n, q);

  std::optional<double> budget;
  for (Eigen::Index i = 0; i < n; ++i) {
    const BidSheet* found = nullptr;
    for (const auto& s : sheets) {
      if (s.agent_id != agents[i].id) continue;
      if (found) throw StructuralError("agent '" + agents[i].id + "' has more than one bid sheet");
      found = &s;
    }
    if (!found) throw StructuralError("missing bid sheet for agent '" + agents[i].id + "'");
    if (static_cast<Eigen::Index>(found->bids.size()) != q)
      throw StructuralError("bid sheet of agent '" + agents[i].id + "' has the wrong length");
    if (budget && *budget != found->budget)
      throw StructuralError("heterogeneous budgets are not supported");
    budget = found->budget;
    for (Eigen::Index a = 0; a < q; ++a) problem.utilities(i, a) = found->bids[a];
  }
  if (sheets.size() != agents.size()) throw StructuralError("bid sheet for an unknown agent");
  return problem;
}

DivisionProblem bids_to_utilities(const std::vector<BidSheet>& sheets,
                                  const std::vector<Good>& goods) {
  std::vector<Agent> agents;
  for (const auto& s : sheets) agents.push_back({s.agent_id, s.agent_id, 1.0});
  return bids_to_utilities(sheets, agents, goods);
}

}  // namespace fairdiv
