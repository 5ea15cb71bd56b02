#include "fairdiv/egalitarian_solver.hpp"

#include "fairdiv/simplex.hpp"

namespace fairdiv {

EgalitarianSolution solve_egalitarian(const DivisionProblem& problem, double tol) {
  require_valid(problem);
  const auto n = problem.num_agents();
  const auto q = problem.num_goods();
  const Vector totals = problem.totals();
  const Vector w = problem.weights();

  // Variables: z(i, a) at i * q + a, then the level t.
  const Eigen::Index t_col = n * q;
  LinearProgram<double> lp(n * q + 1);
  lp.objective(t_col) = 1.0;
  lp.eq_lhs = Matrix::Zero(q, n * q + 1);
  lp.eq_rhs = Vector::Ones(q);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index i = 0; i < n; ++i) lp.eq_lhs(a, i * q + a) = 1.0;
  lp.ub_lhs = Matrix::Zero(n, n * q + 1);
  lp.ub_rhs = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < q; ++a)
      lp.ub_lhs(i, i * q + a) = -problem.utilities(i, a) / totals(i);
    lp.ub_lhs(i, t_col) = w(i);
  }

  DenseSimplex<double> simplex(lp);
  const auto result = simplex.solve();
  if (result.status == LpStatus::Infeasible)
    throw InternalError("egalitarian program reported infeasible");
  if (result.status == LpStatus::Unbounded) throw ModelError("egalitarian program is unbounded");
  if (result.status != LpStatus::Optimal)
    throw InternalError("egalitarian program hit the pivot limit");

  auto to_shares = [&](const Vector& x) {
    Matrix z(n, q);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index a = 0; a < q; ++a) z(i, a) = x(i * q + a);
    return z;
  };

  EgalitarianSolution out;
  out.pivots = result.iterations;
  // First optimal vertex in pivot order; the others are only counted.
  if (result.multiple_optima) out.optimal_vertices = static_cast<int>(simplex.optimal_vertices().size());

  out.allocation = Allocation(to_shares(result.x)).cleaned();
  out.utilities = evaluate(problem, out.allocation);
  out.level = out.utilities.normalized.cwiseQuotient(w).minCoeff();
  out.equality = equality_certificate(problem, out.allocation, std::max(tol, 1e-9));
  return out;
}

EqualityCertificate equality_certificate(const DivisionProblem& problem, const Allocation& alloc,
                                         double tol) {
  const UtilityProfile profile = evaluate(problem, alloc);
  const Vector per_weight = profile.normalized.cwiseQuotient(problem.weights());
  EqualityCertificate cert;
  cert.max_gap = per_weight.maxCoeff() - per_weight.minCoeff();
  if (cert.max_gap <= tol) {
    cert.pass = true;
    cert.explanation = "normalized utilities per weight are equal";
  } else if ((problem.utilities.array() == 0.0).any()) {
    cert.pass = true;
    cert.explanation =
        "zero utilities present: equality is not guaranteed, the allocation is max-min only";
  } else {
    cert.pass = false;
    cert.explanation = "normalized utilities per weight differ by " + std::to_string(cert.max_gap);
  }
  return cert;
}

}  // namespace fairdiv
