#pragma once

#include "fairdiv/core_model.hpp"

#include <string>
#include <vector>

namespace fairdiv {

struct RatingSheet {
  std::string agent_id;
  std::vector<double> ratings;  // one per good, in [1, 5]
};

/// Multiplicative change in subjective value per star. Valid range (1, 2].
class AppreciationFactor {
 public:
  static constexpr double kDefault = 1.1;

  AppreciationFactor() : value_(kDefault) {}
  explicit AppreciationFactor(double k);

  double value() const { return value_; }
  double log() const;

 private:
  double value_;
};

struct RatingError : Error {
  using Error::Error;
};

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

/// Checks every good is rated, values lie in [1, 5] and, unless fractional
/// ratings are enabled, are whole stars.
ValidationReport validate_ratings(const RatingSheet& sheet, std::size_t goods,
                                  bool allow_fractional = false);

/// u_ia = K^(r_ia - 3) m_a, computed as exp((r - 3) ln K) m_a.
DivisionProblem ratings_to_utilities(const std::vector<RatingSheet>& sheets,
                                     const std::vector<Agent>& agents,
                                     const std::vector<Good>& goods, AppreciationFactor k);

/// Rating level rho such that sum_a K^(r_a - rho) m_a = sum_a m_a.
double central_rating(const RatingSheet& sheet, const Vector& market_values, AppreciationFactor k);

/// Standardized utilities K^(r_a - rho) m_a of one sheet.
Vector standardized_utilities(const RatingSheet& sheet, const Vector& market_values,
                              AppreciationFactor k);

/// Shift every rating by delta. Throws RatingError if any result leaves [1, 5].
RatingSheet translate_ratings(const RatingSheet& sheet, double delta);

struct BundleMetrics {
  double market_value = 0.0;                 // mu_i
  double market_value_per_weight = 0.0;      // mu_i / w_i
  std::optional<double> avg_standardized_utility;  // empty when mu_i == 0
  std::optional<double> gain;                      // ln(u-bar) / ln K
  double central_rating = 0.0;
  double normalized_utility = 0.0;           // U-bar_i
};

/// Everything needed to evaluate rating-derived metrics for an allocation.
struct RatingContext {
  std::vector<RatingSheet> sheets;  // in agent order
  Vector market_values;
  AppreciationFactor k;
};

/// Per-agent market value, average standardized utility and gain over the
/// central rating. Throws ModelError if the identity
/// U-bar_i = u-bar_i mu_i / sum m fails beyond 1e-9 relative.
std::vector<BundleMetrics> bundle_metrics(const RatingContext& context, const Allocation& alloc,
                                          const Vector& weights);

}  // namespace fairdiv
