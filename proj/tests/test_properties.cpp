#include "doctest.h"

#include "fairdiv/egalitarian_solver.hpp"
#include "fairdiv/fairness_audit.hpp"
#include "fairdiv/nash_solver.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <random>

using namespace fairdiv;
using fairdiv::testing::make_problem;
using fairdiv::testing::random_utilities;

namespace {

constexpr int kInstances = 240;

struct Instance {
  DivisionProblem problem;
  bool weighted = false;
};

Instance random_instance(std::mt19937_64& rng, bool allow_zero) {
  std::uniform_int_distribution<int> agents(1, 4), goods(1, 6);
  const int n = agents(rng), q = goods(rng);
  Instance out;
  Vector w = Vector::Ones(n);
  if (std::bernoulli_distribution(0.3)(rng)) {
    std::uniform_int_distribution<int> weight(1, 9);
    for (int i = 0; i < n; ++i) w(i) = weight(rng) / 9.0;
    out.weighted = true;
  }
  out.problem = make_problem(random_utilities(rng, n, q, allow_zero), w);
  return out;
}

double max_column_error(const Allocation& z) {
  return (z.shares().colwise().sum().array() - 1.0).abs().maxCoeff();
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

}  // namespace

TEST_CASE("nash solver properties") {
  std::mt19937_64 rng(20240601);
  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < kInstances; ++k) {
    const Instance inst = random_instance(rng, true);
    const DivisionProblem& p = inst.problem;
    CAPTURE(k);
    CAPTURE(p.utilities);
    const NashSolution sol = solve_nash(p);
    REQUIRE(sol.converged);
    CHECK(max_column_error(sol.allocation) <= 1e-9);
    CHECK(split_count(sol.allocation) <= p.num_agents() - 1);

    const AuditReport report = audit(p, sol.allocation);
    if (!inst.weighted) CHECK(report.envy_pass);
    CHECK(report.fair_share_pass);
    for (const auto& row : report.fair_share) CHECK(row.utility >= row.threshold * (1 - 1e-7));

    const double budget = 100.0 + k;
    const PriceVector prices = equilibrium_prices(p, sol, budget);
    CHECK(std::abs(prices.scaled_prices.sum() - budget) <= 1e-6 * budget);
    // Clause 3 compares prices with bids, so it only applies to bid sheets.
    for (const auto& v : verify_clearing(p, sol.allocation, prices).violations) CHECK(v.clause == 3);

    DivisionProblem bids = p;
    for (Eigen::Index i = 0; i < bids.num_agents(); ++i) bids.utilities.row(i) *= budget / p.utilities.row(i).sum();
    const NashSolution bid_sol = solve_nash(bids);
    const auto cert = verify_clearing(bids, bid_sol.allocation, equilibrium_prices(bids, bid_sol, budget));
    CHECK(cert.pass);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("nash properties: " << seconds << " s");
}

TEST_CASE("egalitarian solver properties") {
  std::mt19937_64 rng(8675309);
  for (int k = 0; k < kInstances; ++k) {
    const bool positive = k % 2 == 0;
    const Instance inst = random_instance(rng, !positive);
    const DivisionProblem& p = inst.problem;
    CAPTURE(k);
    CAPTURE(p.utilities);
    const EgalitarianSolution sol = solve_egalitarian(p);
    CHECK(max_column_error(sol.allocation) <= 1e-9);
    CHECK(split_count(sol.allocation) <= p.num_agents() - 1);
    CHECK(sol.equality.pass);
    const Vector level = sol.utilities.normalized.cwiseQuotient(p.weights());
    if ((p.utilities.array() > 0.0).all()) CHECK(level.maxCoeff() - level.minCoeff() <= 1e-7);
    CHECK(level.minCoeff() == doctest::Approx(sol.level).epsilon(1e-12));
  }
}

TEST_CASE("scale invariance at the allocation level") {
  std::mt19937_64 rng(42);
  for (int k = 0; k < kInstances; ++k) {
    const Instance inst = random_instance(rng, k % 3 == 0);
    const DivisionProblem& p = inst.problem;
    CAPTURE(k);
    CAPTURE(p.utilities);
    const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, p.num_agents() - 1)(rng);
    // Powers of two scale exactly, so deterministic solving must return the same matrix bit for bit.
    const double lambda = std::ldexp(1.0, std::uniform_int_distribution<int>(-3, 3)(rng));
    DivisionProblem scaled = p;
    scaled.utilities.row(i) *= lambda;

    const auto n1 = solve_nash(p), n2 = solve_nash(scaled);
    CHECK(n1.allocation.shares() == n2.allocation.shares());
    CHECK(n2.log_objective - n1.log_objective == doctest::Approx(p.agents[i].weight * std::log(lambda)).epsilon(1e-9));

    const auto e1 = solve_egalitarian(p), e2 = solve_egalitarian(scaled);
    CHECK(e1.allocation.shares() == e2.allocation.shares());

    // A general factor changes rounding but not the answer.
    DivisionProblem odd = p;
    odd.utilities.row(i) *= 3.7;
    CHECK((solve_egalitarian(odd).allocation.shares() - e1.allocation.shares()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((solve_nash(odd).allocation.shares() - n1.allocation.shares()).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("rating translation invariance") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> star(1, 5), value(1, 50);
  for (int k = 0; k < kInstances; ++k) {
    const int n = std::uniform_int_distribution<int>(2, 4)(rng);
    const int q = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<Good> goods;
    std::vector<Agent> agents;
    std::vector<RatingSheet> sheets;
    for (int a = 0; a < q; ++a) goods.push_back({"g" + std::to_string(a), "", 10.0 * value(rng)});
    for (int i = 0; i < n; ++i) {
      agents.push_back({"a" + std::to_string(i), "", 1.0});
      RatingSheet s{agents.back().id, {}};
      for (int a = 0; a < q; ++a) s.ratings.push_back(std::min(4, star(rng)));
      sheets.push_back(s);
    }
    CAPTURE(k);
    const AppreciationFactor factor(1.1);
    const auto base = solve_egalitarian(ratings_to_utilities(sheets, agents, goods, factor));
    auto shifted = sheets;
    const int who = k % n;
    shifted[who] = translate_ratings(shifted[who], 1.0);
    const auto moved = solve_egalitarian(ratings_to_utilities(shifted, agents, goods, factor));
    CHECK((base.allocation.shares() - moved.allocation.shares()).cwiseAbs().maxCoeff() <= 1e-9);

    // Standardization identity and the normalized-utility identity.
    Vector m(q);
    for (int a = 0; a < q; ++a) m(a) = *goods[a].market_value;
    for (const auto& s : sheets)
      CHECK(std::abs(standardized_utilities(s, m, factor).sum() - m.sum()) <= 1e-9 * m.sum());
    const RatingContext ctx{sheets, m, factor};
    const auto rows = bundle_metrics(ctx, base.allocation, Vector::Ones(n));
    for (int i = 0; i < n; ++i) {
      if (!rows[i].avg_standardized_utility) continue;
      const double rhs = *rows[i].avg_standardized_utility * rows[i].market_value / m.sum();
      CHECK(std::abs(base.utilities.normalized(i) - rhs) <= 1e-9 * std::max(1e-300, rhs));
      CHECK(*rows[i].gain == doctest::Approx(std::log(*rows[i].avg_standardized_utility) / std::log(1.1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("efficiency verdict agrees with a dominance grid") {
  std::mt19937_64 rng(777);
  const double step = 1e-3;
  int inefficient = 0;
  for (int k = 0; k < 60; ++k) {
    const int q = k % 2 == 0 ? 2 : 3;
    const double grid = q == 2 ? step : 2e-2;
    const auto p = make_problem(random_utilities(rng, 2, q, true));
    const Vector totals = p.totals();
    // A random allocation on the grid, usually wasteful.
    Matrix z(2, q);
    for (int a = 0; a < q; ++a) {
      const double x = std::round(std::uniform_real_distribution<double>(0, 1)(rng) / grid) * grid;
      z(0, a) = x;
      z(1, a) = 1 - x;
    }
    const Vector base = evaluate(p, Allocation(z)).normalized;
    const EfficiencyResult verdict = check_efficiency(p, Allocation(z));

    // Best normalized-sum improvement among grid allocations that dominate z.
    double best = 0.0;
    const int steps = static_cast<int>(std::lround(1.0 / grid));
    std::vector<int> idx(q, 0);
    while (true) {
      Vector u(2);
      u.setZero();
      for (int a = 0; a < q; ++a) {
        const double x = idx[a] * grid;
        u(0) += p.utilities(0, a) * x;
        u(1) += p.utilities(1, a) * (1 - x);
      }
      u = u.cwiseQuotient(totals);
      if ((u.array() >= base.array() - 1e-12).all()) best = std::max(best, (u - base).sum());
      int a = 0;
      while (a < q && ++idx[a] > steps) idx[a++] = 0;
      if (a == q) break;
    }
    CAPTURE(k);
    CAPTURE(p.utilities);
    CAPTURE(z);
    // The LP optimum bounds every grid point and is within one cell of the best one.
    CHECK(best <= verdict.improvement + 1e-9);
    CHECK(verdict.improvement - best <= 2.0 * q * grid + 1e-9);
    if (!verdict.pass) ++inefficient;
    if (verdict.pass) CHECK(best <= 1e-9 * 2);
  }
  CHECK(inefficient > 10);

  // Solver outputs are efficient.
  for (int k = 0; k < 40; ++k) {
    const auto p = make_problem(random_utilities(rng, 2, 3, true));
    CHECK(check_efficiency(p, solve_nash(p).allocation).pass);
    CHECK(check_efficiency(p, solve_egalitarian(p).allocation).pass);
  }
  (void)vec;
}
