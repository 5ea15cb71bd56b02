#pragma once

#include "fairdiv/case_io.hpp"
#include "fairdiv/egalitarian_solver.hpp"
#include "fairdiv/fairness_audit.hpp"
#include "fairdiv/nash_solver.hpp"

#include <optional>

namespace fairdiv {

struct SolveOptions {
  std::optional<Procedure> procedure;  // overrides the case's procedure
  double tol = 1e-9;
  int max_iter = kDefaultMaxIterations;
};

struct ValidationFailed : Error {
  explicit ValidationFailed(ValidationReport r);
  ValidationReport report;
};

struct CaseResult {
  Procedure procedure = Procedure::Nash;
  /// Nash on ratings or egalitarian on bids.
  bool non_default_pairing = false;
  DivisionProblem problem;
  Allocation allocation;
  UtilityProfile utilities;
  std::optional<NashSolution> nash;
  std::optional<EgalitarianSolution> egalitarian;
  std::optional<PriceVector> prices;
  AuditReport audit;
  std::vector<BundleMetrics> metrics;  // rating cases only
};

/// Validate, solve with the designated (or overriding) procedure, price Nash
/// results when a budget is known, and audit.
CaseResult solve_case(const CaseFile& c, const SolveOptions& options = {});

/// Budget used for pricing: the case budget, else the first bid sheet total.
std::optional<double> pricing_budget(const CaseFile& c);

Json result_to_json(const CaseResult& r);
Json audit_to_json(const DivisionProblem& problem, const AuditReport& report);
Json prices_to_json(const PriceVector& prices);
std::optional<PriceVector> prices_from_json(const DivisionProblem& problem, const Json& result);
Json explanation_to_json(const DivisionProblem& problem, const AgentPurchase& agent);
Json metrics_to_json(const DivisionProblem& problem, const std::vector<BundleMetrics>& metrics);

}  // namespace fairdiv
