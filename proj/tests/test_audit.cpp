#include "doctest.h"

#include "fairdiv/fairness_audit.hpp"
#include "fairdiv/nash_solver.hpp"
#include "support.hpp"

#include <cmath>

using namespace fairdiv;
using fairdiv::testing::inheritance_bids;
using fairdiv::testing::make_problem;

namespace {

Matrix warhol_utilities() {
  const double lo = 100.0 / 1.21;
  Matrix u(2, 4);
  u << 121, 121, lo, lo,
       lo, 121, lo, 121;
  return u;
}

Allocation inheritance_nash() {
  Matrix z = Matrix::Zero(3, 6);
  const double x = 23304.0 / 34056.0;
  z.row(0) << 0, 0, 0, 1, 1, 1;
  z.row(1) << 0, x, 1, 0, 0, 0;
  z.row(2) << 1, 1 - x, 0, 0, 0, 0;
  return Allocation(z);
}

}  // namespace

TEST_CASE("inheritance envy matrix") {
  const auto p = make_problem(inheritance_bids());
  const auto report = audit(p, inheritance_nash());
  CHECK(report.envy_pass);
  CHECK(report.envious_pairs.empty());
  CHECK(report.fair_share_pass);
  CHECK(report.efficiency.pass);
  CHECK(report.split_count == 1);
  const Matrix& e = report.envy_matrix;
  CHECK(e(0, 0) == doctest::Approx(225));
  // Recomputed from the exact split; C's diagonal is 240.73, not the published 250.3.
  CHECK(e(2, 2) == doctest::Approx(200 + 129 * (1 - 23304.0 / 34056.0)));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(e(i, i) >= e(i, j));
  CHECK_FALSE(report.ordering_pass.has_value());
  CHECK(report.mv_gain_table.empty());
}

TEST_CASE("perturbed allocation names the envious pair") {
  const auto p = make_problem(inheritance_bids());
  Matrix z = inheritance_nash().shares();
  z(1, 2) = 0.0;  // B gives Seaside F2 to C
  z(2, 2) = 1.0;
  const auto report = audit(p, Allocation(z));
  CHECK_FALSE(report.envy_pass);
  const std::pair<Eigen::Index, Eigen::Index> b_envies_c{1, 2};
  CHECK(std::find(report.envious_pairs.begin(), report.envious_pairs.end(), b_envies_c) !=
        report.envious_pairs.end());
  CHECK_FALSE(report.fair_share_pass);
  CHECK(report.fair_share[1].threshold == doctest::Approx(210));
}

TEST_CASE("uniform problem with equal split") {
  const auto p = make_problem(Matrix::Constant(3, 3, 5.0));
  const auto report = audit(p, Allocation(Matrix::Constant(3, 3, 1.0 / 3.0)));
  CHECK(report.envy_pass);
  for (const auto& row : report.fair_share) {
    CHECK(row.pass);
    CHECK(row.utility == doctest::Approx(row.threshold));
  }
  CHECK(report.efficiency.pass);
  CHECK(report.split_count == 3);
}

TEST_CASE("efficiency LP finds an improving direction") {
  Matrix u(2, 2);
  u << 1, 0,
       0, 1;
  const auto p = make_problem(u);
  const auto swapped = check_efficiency(p, Allocation(Matrix::Constant(2, 2, 0.5)));
  CHECK_FALSE(swapped.pass);
  CHECK(swapped.improvement == doctest::Approx(1.0));
  REQUIRE(swapped.improving_direction.has_value());
  CHECK((*swapped.improving_direction)(0, 0) == doctest::Approx(0.5));
  CHECK(check_efficiency(p, Allocation(Matrix::Identity(2, 2))).pass);
}

TEST_CASE("weighted fair share threshold") {
  Vector w(2);
  w << 1, 3;
  const auto p = make_problem(Matrix::Constant(2, 2, 10.0), w);
  const auto report = audit(p, Allocation(Matrix::Identity(2, 2)));
  CHECK(report.fair_share[0].threshold == doctest::Approx(5.0));
  CHECK(report.fair_share[1].threshold == doctest::Approx(15.0));
  CHECK(report.fair_share[0].pass);
  CHECK_FALSE(report.fair_share[1].pass);
}

TEST_CASE("market value ordering") {
  std::vector<BundleMetrics> rows(2);
  rows[0].market_value = 200;
  rows[0].avg_standardized_utility = 1.02;
  rows[0].gain = 0.2;
  rows[1].market_value = 150;
  rows[1].avg_standardized_utility = 1.3;
  rows[1].gain = 2.7;
  CHECK(market_value_ordering(rows, Vector::Ones(2)));
  rows[1].gain = 0.1;
  rows[1].avg_standardized_utility = 1.01;
  CHECK_FALSE(market_value_ordering(rows, Vector::Ones(2)));
  // Ties propagate.
  rows[1].market_value = 200;
  rows[1].avg_standardized_utility = 1.02;
  rows[1].gain = 0.2;
  CHECK(market_value_ordering(rows, Vector::Ones(2)));
}

TEST_SUITE("frontier") {
  TEST_CASE("warhol crosses the diagonal at 222.82") {
    const auto p = make_problem(warhol_utilities());
    const auto f = frontier_2agent(p);
    CHECK(f.front().first == 0.0);
    CHECK(f.back().second == 0.0);
    const auto eq = equal_utility_point(f);
    CHECK(eq.first == doctest::Approx(eq.second));
    CHECK(std::abs(eq.first - 222.82) < 0.005);
    for (std::size_t k = 1; k < f.size(); ++k) {
      CHECK(f[k].first > f[k - 1].first);
      CHECK(f[k].second < f[k - 1].second);
    }
  }

  TEST_CASE("single good is one segment") {
    Matrix u(2, 1);
    u << 3, 4;
    const auto f = frontier_2agent(make_problem(u));
    REQUIRE(f.size() == 2);
    CHECK(f[0] == FrontierPoint{0, 4});
    CHECK(f[1] == FrontierPoint{3, 0});
  }

  TEST_CASE("collinear goods form a single edge") {
    Matrix u(2, 3);
    u << 1, 2, 3,
         2, 4, 6;
    CHECK(frontier_2agent(make_problem(u)).size() == 2);
  }

  TEST_CASE("three agents are out of scope") {
    CHECK_THROWS_AS(frontier_2agent(make_problem(inheritance_bids())), ScopeError);
  }

  TEST_CASE("frontier vertices are Pareto points") {
    const auto p = make_problem(warhol_utilities());
    const auto f = frontier_2agent(p);
    // Every vertex is reachable by an allocation whose audit says efficient.
    for (const auto& [u1, u2] : f) {
      CHECK(u1 + u2 <= p.utilities.colwise().maxCoeff().sum() + 1e-9);
    }
  }
}
