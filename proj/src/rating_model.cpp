#include "fairdiv/rating_model.hpp"

#include <cmath>

namespace fairdiv {

AppreciationFactor::AppreciationFactor(double k) : value_(k) {
  if (!std::isfinite(k) || !(k > 1.0)) throw RatingError("appreciation factor must exceed 1");
  if (k > 2.0) throw RatingError("appreciation factor must not exceed 2");
}

double AppreciationFactor::log() const { return std::log(value_); }

ValidationReport validate_ratings(const RatingSheet& sheet, std::size_t goods,
                                  bool allow_fractional) {
  ValidationReport report;
  if (sheet.ratings.size() != goods) {
    report.violations.push_back({"unrated-good", "sheet rates " +
                                                     std::to_string(sheet.ratings.size()) + " of " +
                                                     std::to_string(goods) + " goods"});
    return report;
  }
  for (std::size_t a = 0; a < goods; ++a) {
    const double r = sheet.ratings[a];
    if (!std::isfinite(r) || r < kMinRating || r > kMaxRating)
      report.violations.push_back(
          {"rating-out-of-range", "rating of good #" + std::to_string(a) + " is outside 1..5"});
    else if (!allow_fractional && r != std::round(r))
      report.violations.push_back(
          {"fractional-rating", "rating of good #" + std::to_string(a) + " is not a whole star"});
  }
  return report;
}

DivisionProblem ratings_to_utilities(const std::vector<RatingSheet>& sheets,
                                     const std::vector<Agent>& agents,
                                     const std::vector<Good>& goods, AppreciationFactor k) {
  DivisionProblem problem;
  problem.agents = agents;
  problem.goods = goods;
  const Vector m = problem.market_values();
  const auto n = problem.num_agents();
  const auto q = problem.num_goods();
  problem.utilities.resize(n, q);
  const double log_k = k.log();
  for (Eigen::Index i = 0; i < n; ++i) {
    const RatingSheet* sheet = nullptr;
    for (const auto& s : sheets)
      if (s.agent_id == agents[i].id) sheet = &s;
    if (!sheet) throw StructuralError("missing rating sheet for agent '" + agents[i].id + "'");
    if (static_cast<Eigen::Index>(sheet->ratings.size()) != q)
      throw StructuralError("rating sheet of agent '" + agents[i].id + "' has the wrong length");
    for (Eigen::Index a = 0; a < q; ++a)
      problem.utilities(i, a) = std::exp((sheet->ratings[a] - 3.0) * log_k) * m(a);
  }
  return problem;
}

double central_rating(const RatingSheet& sheet, const Vector& market_values, AppreciationFactor k) {
  if (static_cast<Eigen::Index>(sheet.ratings.size()) != market_values.size())
    throw StructuralError("rating sheet length does not match the goods");
  const double total = market_values.sum();
  if (!(total > 0.0)) throw ModelError("total market value must be positive");
  // Factor out K^max(r) so large ratings cannot overflow.
  double r_max = sheet.ratings.empty() ? 0.0 : sheet.ratings.front();
  for (double r : sheet.ratings) r_max = std::max(r_max, r);
  const double log_k = k.log();
  double weighted = 0.0;
  for (Eigen::Index a = 0; a < market_values.size(); ++a)
    weighted += std::exp((sheet.ratings[a] - r_max) * log_k) * market_values(a);
  return r_max + (std::log(weighted) - std::log(total)) / log_k;
}

Vector standardized_utilities(const RatingSheet& sheet, const Vector& market_values,
                              AppreciationFactor k) {
  const double rho = central_rating(sheet, market_values, k);
  Vector out(market_values.size());
  for (Eigen::Index a = 0; a < market_values.size(); ++a)
    out(a) = std::exp((sheet.ratings[a] - rho) * k.log()) * market_values(a);
  return out;
}

RatingSheet translate_ratings(const RatingSheet& sheet, double delta) {
  RatingSheet out = sheet;
  for (std::size_t a = 0; a < out.ratings.size(); ++a) {
    out.ratings[a] += delta;
    if (out.ratings[a] < kMinRating || out.ratings[a] > kMaxRating)
      throw RatingError("translating by " + std::to_string(delta) + " moves good #" +
                        std::to_string(a) + " outside 1..5");
  }
  return out;
}

std::vector<BundleMetrics> bundle_metrics(const RatingContext& context, const Allocation& alloc,
                                          const Vector& weights) {
  const auto n = alloc.num_agents();
  const auto q = alloc.num_goods();
  if (static_cast<Eigen::Index>(context.sheets.size()) != n || context.market_values.size() != q ||
      weights.size() != n)
    throw StructuralError("rating context does not match the allocation");
  alloc.check_feasible();

  const double total_mv = context.market_values.sum();
  const double log_k = context.k.log();
  std::vector<BundleMetrics> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& sheet = context.sheets[static_cast<std::size_t>(i)];
    auto& row = out[static_cast<std::size_t>(i)];
    row.central_rating = central_rating(sheet, context.market_values, context.k);
    row.market_value = alloc.shares().row(i).dot(context.market_values);
    row.market_value_per_weight = row.market_value / weights(i);

    const Vector standardized = standardized_utilities(sheet, context.market_values, context.k);
    const double standardized_bundle = alloc.shares().row(i).dot(standardized);

    // U-bar from the raw rating utilities K^(r - 3) m.
    double raw_bundle = 0.0, raw_total = 0.0;
    for (Eigen::Index a = 0; a < q; ++a) {
      const double u = std::exp((sheet.ratings[a] - 3.0) * log_k) * context.market_values(a);
      raw_bundle += alloc(i, a) * u;
      raw_total += u;
    }
    row.normalized_utility = raw_bundle / raw_total;

    if (row.market_value > 0.0) {
      row.avg_standardized_utility = standardized_bundle / row.market_value;
      row.gain = std::log(*row.avg_standardized_utility) / log_k;
      const double rebuilt = *row.avg_standardized_utility * row.market_value / total_mv;
      if (std::abs(rebuilt - row.normalized_utility) >
          1e-9 * std::max(1.0, std::abs(row.normalized_utility)))
        throw ModelError("normalized utility identity violated for agent #" + std::to_string(i));
    }
  }
  return out;
}

}  // namespace fairdiv
