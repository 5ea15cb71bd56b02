#include "fairdiv/nash_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <utility>

namespace fairdiv {
namespace {

constexpr double kPriceChangeStop = 1e-10;
constexpr double kPolishThresholds[] = {1e-3, 1e-6, 1e-9};

using Edge = std::pair<Eigen::Index, Eigen::Index>;  // (agent, good)

// Bipartite forest on n agents (nodes 0..n-1) and q goods (nodes n..n+q-1).
class Forest {
 public:
  Forest(Eigen::Index n, Eigen::Index q) : n_(n), adj_(static_cast<std::size_t>(n + q)) {}

  // Node path from `from` to `to`, empty if disconnected.
  std::vector<Eigen::Index> path(Eigen::Index from, Eigen::Index to) const {
    std::vector<Eigen::Index> parent(adj_.size(), -1);
    std::deque<Eigen::Index> queue{from};
    parent[static_cast<std::size_t>(from)] = from;
    while (!queue.empty()) {
      const Eigen::Index v = queue.front();
      queue.pop_front();
      if (v == to) break;
      for (Eigen::Index w : adj_[static_cast<std::size_t>(v)]) {
        if (parent[static_cast<std::size_t>(w)] >= 0) continue;
        parent[static_cast<std::size_t>(w)] = v;
        queue.push_back(w);
      }
    }
    if (parent[static_cast<std::size_t>(to)] < 0) return {};
    std::vector<Eigen::Index> out{to};
    while (out.back() != from) out.push_back(parent[static_cast<std::size_t>(out.back())]);
    std::reverse(out.begin(), out.end());
    return out;
  }

  void add(Eigen::Index agent, Eigen::Index good) {
    adj_[static_cast<std::size_t>(agent)].push_back(n_ + good);
    adj_[static_cast<std::size_t>(n_ + good)].push_back(agent);
  }

  void remove(Eigen::Index agent, Eigen::Index good) {
    auto drop = [](std::vector<Eigen::Index>& v, Eigen::Index x) {
      v.erase(std::find(v.begin(), v.end(), x));
    };
    drop(adj_[static_cast<std::size_t>(agent)], n_ + good);
    drop(adj_[static_cast<std::size_t>(n_ + good)], agent);
  }

  const std::vector<Eigen::Index>& neighbours(Eigen::Index node) const {
    return adj_[static_cast<std::size_t>(node)];
  }

 private:
  Eigen::Index n_;
  std::vector<std::vector<Eigen::Index>> adj_;
};

// Exact equilibrium on the support of `spend` (entries above delta * e_i).
// Returns shares, or nothing if the support does not carry an equilibrium.
std::optional<Matrix> polish(const Matrix& u, const Vector& e, const Matrix& spend, double delta) {
  const Eigen::Index n = u.rows();
  const Eigen::Index q = u.cols();

  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < q; ++a)
      if (u(i, a) > 0.0 && spend(i, a) > delta * e(i)) edges.emplace_back(i, a);
  std::stable_sort(edges.begin(), edges.end(), [&](const Edge& l, const Edge& r) {
    return spend(l.first, l.second) > spend(r.first, r.second);
  });

  // Build a spanning forest, cancelling flow around every cycle.
  Matrix flow = Matrix::Zero(n, q);
  Forest forest(n, q);
  for (const auto& [i, a] : edges) {
    flow(i, a) = spend(i, a);
    const auto p = forest.path(n + a, i);
    if (p.empty()) {
      forest.add(i, a);
      continue;
    }
    // Cycle: new edge (i, a) followed by the forest path a -> ... -> i.
    std::vector<Edge> cycle{{i, a}};
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      const Eigen::Index x = p[k], y = p[k + 1];
      cycle.push_back(x < n ? Edge{x, y - n} : Edge{y, x - n});
    }
    double min_even = std::numeric_limits<double>::infinity();
    double min_odd = min_even;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      double& m = k % 2 == 0 ? min_even : min_odd;
      m = std::min(m, flow(cycle[k].first, cycle[k].second));
    }
    const bool drain_even = min_even <= min_odd;
    const double amount = drain_even ? min_even : min_odd;
    std::size_t drained = cycle.size();
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      const bool down = (k % 2 == 0) == drain_even;
      double& f = flow(cycle[k].first, cycle[k].second);
      f += down ? -amount : amount;
      if (down && drained == cycle.size() && f <= 0.0) drained = k;
    }
    flow(cycle[drained].first, cycle[drained].second) = 0.0;
    if (drained != 0) {
      forest.remove(cycle[drained].first, cycle[drained].second);
      forest.add(i, a);
    }
  }

  // Prices up to one scale per tree, then fix the scale by budget balance.
  Vector price = Vector::Zero(q);
  Vector rate = Vector::Zero(n);  // bang-per-buck of each agent
  std::vector<int> component(static_cast<std::size_t>(n + q), -1);
  int components = 0;
  for (Eigen::Index root = 0; root < n + q; ++root) {
    if (component[static_cast<std::size_t>(root)] >= 0) continue;
    if (root >= n || forest.neighbours(root).empty()) return std::nullopt;
    const int c = components++;
    std::vector<Eigen::Index> members{root};
    component[static_cast<std::size_t>(root)] = c;
    rate(root) = 1.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Eigen::Index v = members[k];
      for (Eigen::Index w : forest.neighbours(v)) {
        if (component[static_cast<std::size_t>(w)] >= 0) continue;
        component[static_cast<std::size_t>(w)] = c;
        members.push_back(w);
        if (v < n)
          price(w - n) = u(v, w - n) / rate(v);
        else
          rate(w) = u(w, v - n) / price(v - n);
      }
    }
    double budget = 0.0, value = 0.0;
    for (Eigen::Index v : members) {
      if (v < n)
        budget += e(v);
      else
        value += price(v - n);
    }
    const double scale = budget / value;
    for (Eigen::Index v : members) {
      if (v < n)
        rate(v) /= scale;
      else
        price(v - n) *= scale;
    }
  }

  // Flows by leaf elimination: agents supply e_i, goods absorb p_a.
  Vector residual(n + q);
  residual << e, price;
  std::vector<std::size_t> degree(static_cast<std::size_t>(n + q));
  for (Eigen::Index v = 0; v < n + q; ++v)
    degree[static_cast<std::size_t>(v)] = forest.neighbours(v).size();
  std::vector<bool> done(static_cast<std::size_t>(n + q), false);
  std::deque<Eigen::Index> leaves;
  for (Eigen::Index v = 0; v < n + q; ++v)
    if (degree[static_cast<std::size_t>(v)] == 1) leaves.push_back(v);
  Matrix exact = Matrix::Zero(n, q);
  while (!leaves.empty()) {
    const Eigen::Index v = leaves.front();
    leaves.pop_front();
    if (done[static_cast<std::size_t>(v)] || degree[static_cast<std::size_t>(v)] != 1) continue;
    Eigen::Index w = -1;
    for (Eigen::Index x : forest.neighbours(v))
      if (!done[static_cast<std::size_t>(x)]) w = x;
    const double f = residual(v);
    if (v < n)
      exact(v, w - n) = f;
    else
      exact(w, v - n) = f;
    residual(w) -= f;
    residual(v) = 0.0;
    done[static_cast<std::size_t>(v)] = true;
    if (--degree[static_cast<std::size_t>(w)] == 1) leaves.push_back(w);
  }

  const double total = e.sum();
  if ((exact.array() < -1e-12 * total).any()) return std::nullopt;
  exact = exact.cwiseMax(0.0);
  Matrix z(n, q);
  for (Eigen::Index a = 0; a < q; ++a) z.col(a) = exact.col(a) / price(a);
  return z;
}

}  // namespace

double nash_residual(const DivisionProblem& problem, const Allocation& alloc) {
  const UtilityProfile profile = evaluate(problem, alloc);
  const Vector w = problem.weights();
  const Matrix& u = problem.utilities;
  const Eigen::Index n = u.rows();
  const Eigen::Index q = u.cols();
  if ((profile.values.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();

  Vector p = Vector::Zero(q);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index i = 0; i < n; ++i) p(a) = std::max(p(a), w(i) * u(i, a) / profile.values(i));

  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double spent = 0.0;
    for (Eigen::Index a = 0; a < q; ++a) {
      spent += p(a) * alloc(i, a);
      if (alloc(i, a) > kFeasibilityTol && p(a) > 0.0)
        worst = std::max(worst, 1.0 - w(i) * u(i, a) / profile.values(i) / p(a));
    }
    worst = std::max(worst, std::abs(spent - w(i)) / w(i));
  }
  return worst;
}

NashSolution solve_nash(const DivisionProblem& problem, double tol, int max_iter) {
  require_valid(problem);
  if (!(tol > 0.0) || tol > 1e-3) throw StructuralError("tolerance must lie in (0, 1e-3]");
  const Eigen::Index n = problem.num_agents();
  const Eigen::Index q = problem.num_goods();
  const Vector e = problem.weights();

  // Goods nobody values have price zero; they go to the first agent.
  std::vector<Eigen::Index> active;
  for (Eigen::Index a = 0; a < q; ++a)
    if (problem.utilities.col(a).maxCoeff() > 0.0) active.push_back(a);
  const auto qa = static_cast<Eigen::Index>(active.size());
  Matrix u(n, qa);
  for (Eigen::Index k = 0; k < qa; ++k) u.col(k) = problem.utilities.col(active[k]);

  auto finish = [&](const Matrix& za, int iterations) {
    Matrix z = Matrix::Zero(n, q);
    for (Eigen::Index k = 0; k < qa; ++k) z.col(active[k]) = za.col(k);
    for (Eigen::Index a = 0; a < q; ++a)
      if (problem.utilities.col(a).maxCoeff() <= 0.0) z(0, a) = 1.0;
    NashSolution out;
    out.allocation = Allocation(z).cleaned();
    out.utilities = evaluate(problem, out.allocation);
    out.log_objective = e.dot(out.utilities.values.array().log().matrix());
    out.iterations = iterations;
    out.residual = nash_residual(problem, out.allocation);
    out.converged = out.residual <= tol;
    return out;
  };

  // Proportional response: each agent splits its budget in proportion to the
  // utility each good currently contributes; prices are total spending.
  Matrix spend(n, qa);
  for (Eigen::Index i = 0; i < n; ++i) spend.row(i) = e(i) * u.row(i) / u.row(i).sum();
  Vector price = spend.colwise().sum().transpose();

  int next_check = 8;
  for (int iter = 1; iter <= max_iter; ++iter) {
    Matrix z = spend.array().rowwise() / price.transpose().array();
    const Vector utility = u.cwiseProduct(z).rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i)
      spend.row(i) = (e(i) / utility(i)) * u.row(i).cwiseProduct(z.row(i));
    const Vector next_price = spend.colwise().sum().transpose();
    const double change = ((next_price - price).cwiseAbs().array() / price.array()).maxCoeff();
    price = next_price;

    const bool stalled = change <= kPriceChangeStop;
    if (stalled || iter == next_check || iter == max_iter) {
      if (iter == next_check) next_check = std::min(next_check * 2, next_check + 4096);
      for (double delta : kPolishThresholds) {
        const auto exact = polish(u, e, spend, delta);
        if (!exact) continue;
        NashSolution out = finish(*exact, iter);
        if (out.converged) return out;
      }
    }
  }

  Matrix z = spend.array().rowwise() / price.transpose().array();
  const NashSolution last = finish(z, max_iter);
  throw ConvergenceError("Nash iteration did not converge in " + std::to_string(max_iter) +
                             " iterations (residual " + std::to_string(last.residual) + ")",
                         last.residual, max_iter);
}

PriceVector equilibrium_prices(const DivisionProblem& problem, const NashSolution& solution,
                               double budget) {
  if (!solution.converged) throw RefusalError("prices require a converged Nash solution");
  if (!(budget > 0.0)) throw StructuralError("budget must be positive");
  const Vector w = problem.weights();
  const Matrix& u = problem.utilities;
  PriceVector out;
  out.budget = budget;
  out.unit_prices = Vector::Zero(problem.num_goods());
  for (Eigen::Index a = 0; a < u.cols(); ++a)
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      out.unit_prices(a) =
          std::max(out.unit_prices(a), w(i) * u(i, a) / solution.utilities.values(i));
  out.scaled_prices = out.unit_prices * (budget / w.sum());
  out.per_agent_budget = w * (budget / w.sum());
  return out;
}

PriceVector posted_prices(const DivisionProblem& problem, const Vector& scaled, double budget) {
  if (scaled.size() != problem.num_goods())
    throw StructuralError("price vector length does not match the goods");
  if (!(budget > 0.0)) throw StructuralError("budget must be positive");
  const Vector w = problem.weights();
  PriceVector out;
  out.budget = budget;
  out.scaled_prices = scaled;
  out.unit_prices = scaled * (w.sum() / budget);
  out.per_agent_budget = w * (budget / w.sum());
  return out;
}

ClearingCertificate verify_clearing(const DivisionProblem& problem, const Allocation& alloc,
                                    const PriceVector& prices, double tol) {
  ClearingCertificate cert;
  const UtilityProfile profile = evaluate(problem, alloc);
  const Vector w = problem.weights();
  const Matrix& u = problem.utilities;
  auto fail = [&](int clause, Eigen::Index i, Eigen::Index a, std::string detail) {
    cert.pass = false;
    (clause == 1 ? cert.budgets_spent : clause == 2 ? cert.max_bang_per_buck : cert.within_bids) =
        false;
    cert.violations.push_back({clause, i, a, std::move(detail)});
  };

  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double spent = alloc.shares().row(i).dot(prices.scaled_prices);
    if (std::abs(spent - prices.per_agent_budget(i)) > tol * prices.budget)
      fail(1, i, -1,
           "spends " + std::to_string(spent) + " of " + std::to_string(prices.per_agent_budget(i)));
    for (Eigen::Index a = 0; a < u.cols(); ++a) {
      if (alloc(i, a) <= tol) continue;
      const double p = prices.unit_prices(a);
      const double bang = profile.values(i) > 0.0 ? w(i) * u(i, a) / profile.values(i) : 0.0;
      if (std::abs(bang - p) > tol * std::max(p, bang) || profile.values(i) <= 0.0)
        fail(2, i, a, "not a maximal bang-per-buck good");
      if (prices.scaled_prices(a) - u(i, a) > tol * prices.budget)
        fail(3, i, a,
             "pays " + std::to_string(prices.scaled_prices(a)) + " above bid " +
                 std::to_string(u(i, a)));
    }
  }
  return cert;
}

PurchaseExplanation purchase_explanation(const DivisionProblem& problem,
                                         const PriceVector& prices) {
  PurchaseExplanation out;
  const Eigen::Index q = problem.num_goods();
  for (Eigen::Index i = 0; i < problem.num_agents(); ++i) {
    AgentPurchase agent;
    agent.agent = i;
    agent.budget = prices.per_agent_budget(i);
    std::vector<Eigen::Index> candidates;
    for (Eigen::Index a = 0; a < q; ++a) {
      DiscountRow row;
      row.good = a;
      row.price = prices.scaled_prices(a);
      row.bid = problem.utilities(i, a);
      if (row.price <= row.bid) {
        row.discount = row.bid > 0.0 ? (row.bid - row.price) / row.bid : 0.0;
        candidates.push_back(a);
      }
      agent.table.push_back(row);
    }

    double remaining = agent.budget;
    const double dust = 1e-9 * std::max(1.0, agent.budget);
    while (!candidates.empty() && remaining > dust) {
      // Highest discount first; near-equal discounts go by good order.
      auto best = candidates.begin();
      for (auto it = candidates.begin(); it != candidates.end(); ++it)
        if (*agent.table[*it].discount > *agent.table[*best].discount + 1e-9) best = it;
      const Eigen::Index a = *best;
      candidates.erase(best);
      const double price = agent.table[static_cast<std::size_t>(a)].price;
      PurchaseStep step;
      step.good = a;
      if (price <= remaining + dust) {
        step.share = 1.0;
        step.cost = price;
      } else {
        step.share = remaining / price;
        step.cost = remaining;
      }
      remaining = std::max(0.0, remaining - step.cost);
      step.remaining = remaining;
      agent.purchases.push_back(step);
    }
    agent.remaining = remaining;
    out.agents.push_back(std::move(agent));
  }
  return out;
}

}  // namespace fairdiv
