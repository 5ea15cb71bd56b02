#pragma once

#include "fairdiv/core_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairdiv {

/// Reasonable-offer interval for one good; an empty upper bound means [lower, inf).
struct BidRange {
  double lower = 0.0;
  std::optional<double> upper;

  bool contains(double bid) const { return bid >= lower && (!upper || bid <= *upper); }
};

struct BidSheet {
  std::string agent_id;
  std::vector<double> bids;
  double budget = 0.0;

  double total() const;
};

struct RangeSuggestion {
  std::vector<BidRange> ranges;
  double budget = 0.0;
};

/// Relative budget tolerance used for "bids sum to B" checks.
inline constexpr double kBudgetRelTol = 1e-6;
/// Relative slack on range bounds, absorbing rounding from scaling.
inline constexpr double kRangeRelTol = 1e-9;

/// Symmetric ranges [v(1-s), v(1+s)] with budget = sum of tentative values.
RangeSuggestion suggest_ranges(const std::vector<double>& tentative_values, double spread);

/// Asymmetric variant: no upper spread gives unbounded ranges; the budget may be
/// overridden by the mediator (the inheritance case rounds 632k down to 630k).
RangeSuggestion suggest_ranges(const std::vector<double>& tentative_values, double lower_spread,
                               std::optional<double> upper_spread,
                               std::optional<double> budget_override = std::nullopt);

/// Flags out-of-range bids, negative bids, and a budget mismatch beyond 1e-6 B.
/// Bids placed exactly on a finite upper bound produce a warning (they invite ties).
ValidationReport validate_bids(const BidSheet& sheet, const std::vector<BidRange>& ranges,
                               double budget);

struct ScaledSheet {
  BidSheet sheet;
  ValidationReport range_report;  // post-scaling range check, not repaired
};

struct ScalingError : Error {
  using Error::Error;
};

/// Multiply every bid by budget / sum(bids). Throws ScalingError on all-zero bids.
BidSheet scale_bids_to_budget(const BidSheet& sheet, double budget);
ScaledSheet scale_bids_to_budget(const BidSheet& sheet, double budget,
                                 const std::vector<BidRange>& ranges);

/// u_ia = b_ia verbatim. Sheets are matched to goods by position and to agents
/// by id; every agent needs exactly one sheet and all budgets must agree.
DivisionProblem bids_to_utilities(const std::vector<BidSheet>& sheets,
                                  const std::vector<Agent>& agents,
                                  const std::vector<Good>& goods);

/// Convenience overload: one unit-weight agent per sheet, in sheet order.
DivisionProblem bids_to_utilities(const std::vector<BidSheet>& sheets,
                                  const std::vector<Good>& goods);

}  // namespace fairdiv
