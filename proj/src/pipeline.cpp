#include "fairdiv/pipeline.hpp"

namespace fairdiv {
namespace {

std::string describe(const ValidationReport& r) {
  std::string out = "invalid case";
  for (const auto& v : r.violations) out += "\n  [" + v.code + "] " + v.message;
  return out;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json money_array(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(format_money(v(k)));
  return out;
}

Json number_array(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

Vector read_money_array(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = parse_money(j[k]);
  return v;
}

}  // namespace

ValidationFailed::ValidationFailed(ValidationReport r) : Error(describe(r)), report(std::move(r)) {}

std::optional<double> pricing_budget(const CaseFile& c) {
  if (c.budget) return c.budget;
  if (c.has_bids()) return c.bids.front().total();
  return std::nullopt;
}

CaseResult solve_case(const CaseFile& c, const SolveOptions& options) {
  const ValidationReport report = validate_case(c);
  if (!report.ok()) throw ValidationFailed(report);

  CaseResult r;
  r.procedure = options.procedure.value_or(c.procedure);
  r.non_default_pairing = (r.procedure == Procedure::Nash) != c.has_bids();
  r.problem = case_problem(c);

  if (r.procedure == Procedure::Nash) {
    r.nash = solve_nash(r.problem, options.tol, options.max_iter);
    r.allocation = r.nash->allocation;
    if (const auto budget = pricing_budget(c))
      r.prices = equilibrium_prices(r.problem, *r.nash, *budget);
  } else {
    r.egalitarian = solve_egalitarian(r.problem, options.tol);
    r.allocation = r.egalitarian->allocation;
  }
  r.utilities = evaluate(r.problem, r.allocation);
  const auto ratings = case_rating_context(c);
  r.audit = audit(r.problem, r.allocation, ratings, options.tol);
  if (ratings) r.metrics = bundle_metrics(*ratings, r.allocation, r.problem.weights());
  return r;
}

Json prices_to_json(const PriceVector& prices) {
  return Json{{"budget", format_money(prices.budget)},
              {"unit", number_array(prices.unit_prices)},
              {"scaled", money_array(prices.scaled_prices)},
              {"per_agent_budget", money_array(prices.per_agent_budget)}};
}

std::optional<PriceVector> prices_from_json(const DivisionProblem& problem, const Json& result) {
  if (!result.contains("prices") || result.at("prices").is_null()) return std::nullopt;
  const Json& p = result.at("prices");
  PriceVector out;
  out.budget = parse_money(p.at("budget"));
  out.scaled_prices = read_money_array(p.at("scaled"));
  out.per_agent_budget = read_money_array(p.at("per_agent_budget"));
  if (out.scaled_prices.size() != problem.num_goods() ||
      out.per_agent_budget.size() != problem.num_agents())
    throw StructuralError("price vector does not match the case");
  out.unit_prices = out.scaled_prices * (problem.weights().sum() / out.budget);
  return out;
}

Json audit_to_json(const DivisionProblem& problem, const AuditReport& report) {
  Json j;
  j["envy_matrix"] = Json::array();
  for (Eigen::Index i = 0; i < report.envy_matrix.rows(); ++i)
    j["envy_matrix"].push_back(money_array(report.envy_matrix.row(i).transpose()));
  j["envy_pass"] = report.envy_pass;
  j["envious_pairs"] = Json::array();
  for (const auto& [i, h] : report.envious_pairs)
    j["envious_pairs"].push_back({problem.agents[static_cast<std::size_t>(i)].id,
                                  problem.agents[static_cast<std::size_t>(h)].id});
  j["fair_share"] = Json::array();
  for (std::size_t i = 0; i < report.fair_share.size(); ++i) {
    const auto& row = report.fair_share[i];
    j["fair_share"].push_back({{"agent", problem.agents[i].id},
                               {"utility", format_money(row.utility)},
                               {"threshold", format_money(row.threshold)},
                               {"pass", row.pass}});
  }
  j["fair_share_pass"] = report.fair_share_pass;
  Json eff{{"pass", report.efficiency.pass}, {"improvement", report.efficiency.improvement}};
  if (report.efficiency.improving_direction) {
    Json dir = Json::array();
    const Matrix& d = *report.efficiency.improving_direction;
    for (Eigen::Index i = 0; i < d.rows(); ++i) dir.push_back(number_array(d.row(i).transpose()));
    eff["improving_direction"] = dir;
  }
  j["efficiency"] = eff;
  if (!report.mv_gain_table.empty()) {
    j["mv_gain_table"] = Json::array();
    for (std::size_t i = 0; i < report.mv_gain_table.size(); ++i) {
      const auto& row = report.mv_gain_table[i];
      j["mv_gain_table"].push_back({{"agent", problem.agents[i].id},
                                    {"market_value", format_money(row.market_value)},
                                    {"market_value_per_weight", format_money(row.market_value_per_weight)},
                                    {"avg_standardized_utility", optional_number(row.avg_standardized_utility)},
                                    {"gain", optional_number(row.gain)}});
    }
  }
  if (report.ordering_pass) j["ordering_pass"] = *report.ordering_pass;
  j["split_count"] = report.split_count;
  return j;
}

Json metrics_to_json(const DivisionProblem& problem, const std::vector<BundleMetrics>& metrics) {
  Json out = Json::array();
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& m = metrics[i];
    out.push_back({{"agent", problem.agents[i].id},
                   {"market_value", format_money(m.market_value)},
                   {"market_value_per_weight", format_money(m.market_value_per_weight)},
                   {"avg_standardized_utility", optional_number(m.avg_standardized_utility)},
                   {"gain", optional_number(m.gain)},
                   {"central_rating", m.central_rating},
                   {"normalized_utility", m.normalized_utility}});
  }
  return out;
}

Json explanation_to_json(const DivisionProblem& problem, const AgentPurchase& agent) {
  Json j;
  j["agent"] = problem.agents[static_cast<std::size_t>(agent.agent)].id;
  j["budget"] = format_money(agent.budget);
  j["table"] = Json::array();
  for (const auto& row : agent.table) {
    j["table"].push_back({{"good", problem.goods[static_cast<std::size_t>(row.good)].id},
                          {"price", format_money(row.price)},
                          {"bid", format_money(row.bid)},
                          {"ruled_out", row.ruled_out()},
                          {"discount", optional_number(row.discount)}});
  }
  j["purchases"] = Json::array();
  for (const auto& step : agent.purchases) {
    j["purchases"].push_back({{"good", problem.goods[static_cast<std::size_t>(step.good)].id},
                              {"share", step.share},
                              {"cost", format_money(step.cost)},
                              {"remaining", format_money(step.remaining)}});
  }
  j["remaining"] = format_money(agent.remaining);
  return j;
}

Json result_to_json(const CaseResult& r) {
  Json j;
  j["procedure"] = to_string(r.procedure);
  j["non_default_pairing"] = r.non_default_pairing;
  j["allocation"] = allocation_to_json(r.problem, r.allocation);
  j["utilities"] = money_array(r.utilities.values);
  j["normalized_utilities"] = number_array(r.utilities.normalized);
  if (r.nash) {
    j["nash"] = {{"log_objective", r.nash->log_objective},
                 {"iterations", r.nash->iterations},
                 {"residual", r.nash->residual}};
  }
  if (r.egalitarian) {
    j["egalitarian"] = {{"level", r.egalitarian->level},
                        {"equality_pass", r.egalitarian->equality.pass},
                        {"equality_gap", r.egalitarian->equality.max_gap},
                        {"equality_note", r.egalitarian->equality.explanation},
                        {"optimal_vertices", r.egalitarian->optimal_vertices}};
  }
  j["prices"] = r.prices ? prices_to_json(*r.prices) : Json(nullptr);
  j["audit"] = audit_to_json(r.problem, r.audit);
  if (!r.metrics.empty()) j["metrics"] = metrics_to_json(r.problem, r.metrics);
  return j;
}

}  // namespace fairdiv
