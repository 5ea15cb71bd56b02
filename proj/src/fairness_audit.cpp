#include "fairdiv/fairness_audit.hpp"

#include "fairdiv/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairdiv {
namespace {

int sign_with_ties(double x, double y) {
  const double scale = std::max({1.0, std::abs(x), std::abs(y)});
  if (std::abs(x - y) <= 1e-9 * scale) return 0;
  return x > y ? 1 : -1;
}

}  // namespace

Matrix envy_matrix(const DivisionProblem& problem, const Allocation& alloc) {
  if (alloc.num_agents() != problem.num_agents() || alloc.num_goods() != problem.num_goods())
    throw StructuralError("allocation shape does not match the problem");
  return problem.utilities * alloc.shares().transpose();
}

EfficiencyResult check_efficiency(const DivisionProblem& problem, const Allocation& alloc,
                                  double tol) {
  const auto n = problem.num_agents();
  const auto q = problem.num_goods();
  const Vector totals = problem.totals();
  const Vector current = evaluate(problem, alloc).normalized;

  // max sum_i U-bar_i(z') s.t. U-bar_i(z') >= U-bar_i(z), columns of z' sum to 1.
  LinearProgram<double> lp(n * q);
  lp.eq_lhs = Matrix::Zero(q, n * q);
  lp.eq_rhs = Vector::Ones(q);
  lp.ub_lhs = Matrix::Zero(n, n * q);
  lp.ub_rhs = -current;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < q; ++a) {
      const double coeff = totals(i) > 0.0 ? problem.utilities(i, a) / totals(i) : 0.0;
      lp.objective(i * q + a) = coeff;
      lp.ub_lhs(i, i * q + a) = -coeff;
      lp.eq_lhs(a, i * q + a) = 1.0;
    }
  }
  // Dust below the current levels would make phase 1 report infeasibility.
  lp.ub_rhs.array() += 1e-12;

  EfficiencyResult out;
  DenseSimplex<double> simplex(lp);
  const auto result = simplex.solve();
  if (result.status != LpStatus::Optimal) return out;
  out.improvement = result.objective - current.sum();
  if (out.improvement > tol * std::max<double>(1.0, static_cast<double>(n))) {
    out.pass = false;
    Matrix better(n, q);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index a = 0; a < q; ++a) better(i, a) = result.x(i * q + a);
    out.improving_direction = better - alloc.shares();
  }
  return out;
}

bool market_value_ordering(const std::vector<BundleMetrics>& rows, const Vector& weights) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t h = i + 1; h < rows.size(); ++h) {
      const auto& ri = rows[i];
      const auto& rh = rows[h];
      if (!ri.avg_standardized_utility || !rh.avg_standardized_utility) continue;
      const int mv = sign_with_ties(ri.market_value / weights(static_cast<Eigen::Index>(i)),
                                    rh.market_value / weights(static_cast<Eigen::Index>(h)));
      const int ubar = sign_with_ties(*ri.avg_standardized_utility, *rh.avg_standardized_utility);
      const int gain = sign_with_ties(*ri.gain, *rh.gain);
      if (mv != -ubar || ubar != gain) return false;
    }
  }
  return true;
}

AuditReport audit(const DivisionProblem& problem, const Allocation& alloc,
                  const std::optional<RatingContext>& ratings, double tol) {
  AuditReport report;
  const auto n = problem.num_agents();
  const Vector w = problem.weights();
  const Vector totals = problem.totals();

  report.envy_matrix = envy_matrix(problem, alloc);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double own = report.envy_matrix(i, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && report.envy_matrix(i, j) > own + kEnvyRelTol * std::abs(own)) {
        report.envy_pass = false;
        report.envious_pairs.emplace_back(i, j);
      }
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    FairShareRow row;
    row.utility = report.envy_matrix(i, i);
    row.threshold = w(i) / w.sum() * totals(i);
    row.pass = row.utility >= row.threshold - std::max(tol, kEnvyRelTol) * std::max(1.0, row.threshold);
    report.fair_share_pass = report.fair_share_pass && row.pass;
    report.fair_share.push_back(row);
  }

  report.efficiency = check_efficiency(problem, alloc, tol);
  report.split_count = split_count(alloc);

  if (ratings) {
    const auto metrics = bundle_metrics(*ratings, alloc, w);
    for (const auto& m : metrics)
      report.mv_gain_table.push_back(
          {m.market_value, m.market_value_per_weight, m.avg_standardized_utility, m.gain});
    report.ordering_pass = market_value_ordering(metrics, w);
  }
  return report;
}

std::vector<FrontierPoint> frontier_2agent(const DivisionProblem& problem) {
  if (problem.num_agents() != 2) throw ScopeError("the frontier is defined for exactly two agents");
  const Matrix& u = problem.utilities;
  std::vector<Eigen::Index> order;
  for (Eigen::Index a = 0; a < problem.num_goods(); ++a)
    if (u(0, a) > 0.0 || u(1, a) > 0.0) order.push_back(a);
  // u_1a / u_2a descending, compared by cross-multiplication.
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return u(0, a) * u(1, b) > u(0, b) * u(1, a);
  });

  // Agent 2 keeps the goods not yet swept; suffix sums avoid cancellation.
  std::vector<double> kept(order.size() + 1, 0.0);
  for (std::size_t k = order.size(); k-- > 0;) kept[k] = kept[k + 1] + u(1, order[k]);

  std::vector<FrontierPoint> out{{0.0, kept[0]}};
  double u1 = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Eigen::Index a = order[k];
    u1 += u(0, a);
    const double u2 = kept[k + 1];
    const bool collinear_next =
        k + 1 < order.size() &&
        std::abs(u(0, a) * u(1, order[k + 1]) - u(0, order[k + 1]) * u(1, a)) <=
            1e-12 * std::max(1.0, u(0, a) * u(1, order[k + 1]));
    if (!collinear_next) out.emplace_back(u1, u2);
  }
  return out;
}

FrontierPoint equal_utility_point(const std::vector<FrontierPoint>& frontier) {
  for (std::size_t k = 0; k + 1 < frontier.size(); ++k) {
    const auto [x0, y0] = frontier[k];
    const auto [x1, y1] = frontier[k + 1];
    const double d0 = x0 - y0, d1 = x1 - y1;
    if (d0 <= 0.0 && d1 >= 0.0) {
      const double t = d1 == d0 ? 0.0 : -d0 / (d1 - d0);
      const double x = x0 + t * (x1 - x0);
      return {x, x};
    }
  }
  throw ModelError("frontier does not cross the diagonal");
}

}  // namespace fairdiv
