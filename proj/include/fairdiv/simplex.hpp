#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <set>
#include <vector>

namespace fairdiv {

/// maximize c^T x subject to A_eq x = b_eq, A_ub x <= b_ub, x >= 0.
template <typename Scalar>
struct LinearProgram {
  using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  VectorX objective;
  MatrixX eq_lhs;
  VectorX eq_rhs;
  MatrixX ub_lhs;
  VectorX ub_rhs;

  explicit LinearProgram(Eigen::Index variables = 0)
      : objective(VectorX::Zero(variables)),
        eq_lhs(0, variables),
        eq_rhs(0),
        ub_lhs(0, variables),
        ub_rhs(0) {}

  Eigen::Index num_variables() const { return objective.size(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

template <typename Scalar>
struct LpSolution {
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  LpStatus status = LpStatus::IterationLimit;
  VectorX x;
  Scalar objective = Scalar(0);
  int iterations = 0;
  /// A non-basic structural column with zero reduced cost exists at the optimum.
  bool multiple_optima = false;
};

/// Two-phase tableau simplex with Bland's rule. Deterministic: entering column
/// is the lowest-index improving one, leaving row the lowest basic index among
/// ratio ties. Meant for the small dense programs of this library.
template <typename Scalar>
class DenseSimplex {
 public:
  using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit DenseSimplex(const LinearProgram<Scalar>& lp, Scalar eps = Scalar(1e-11),
                        int max_iterations = 100000)
      : eps_(eps), max_iterations_(max_iterations) {
    build(lp);
  }

  LpSolution<Scalar> solve() {
    LpSolution<Scalar> out;
    // Phase 1: maximize -sum(artificials).
    if (num_artificial_ > 0) {
      set_objective_row(phase1_costs());
      const LpStatus s = iterate(/*allow_artificial=*/true, out.iterations);
      if (s == LpStatus::IterationLimit) {
        out.status = s;
        return out;
      }
      if (tableau_(rows_, rhs_col()) < -feasibility_tol()) {
        out.status = LpStatus::Infeasible;
        return out;
      }
      drive_out_artificials();
    }
    set_objective_row(costs_);
    const LpStatus s = iterate(/*allow_artificial=*/false, out.iterations);
    out.status = s;
    if (s != LpStatus::Optimal) return out;
    solved_ = true;
    out.x = current_x();
    out.objective = tableau_(rows_, rhs_col());
    out.multiple_optima = !zero_reduced_cost_columns().empty();
    return out;
  }

  /// All distinct optimal vertices reachable by degenerate-objective pivots,
  /// in breadth-first discovery order starting at the vertex solve() returned.
  /// Call only after solve() returned Optimal.
  std::vector<VectorX> optimal_vertices(std::size_t max_bases = 4096) const {
    std::vector<VectorX> vertices;
    if (!solved_) return vertices;
    std::set<std::vector<Eigen::Index>> seen;
    std::deque<std::pair<MatrixX, std::vector<Eigen::Index>>> queue;
    queue.emplace_back(tableau_, basis_);
    seen.insert(sorted(basis_));
    while (!queue.empty() && seen.size() <= max_bases) {
      auto [tab, basis] = std::move(queue.front());
      queue.pop_front();
      const VectorX x = extract_x(tab, basis);
      const bool duplicate = std::any_of(vertices.begin(), vertices.end(), [&](const VectorX& v) {
        return (v - x).cwiseAbs().maxCoeff() <= Scalar(1e-9);
      });
      if (!duplicate) vertices.push_back(x);

      for (Eigen::Index j = 0; j < structural_cols(); ++j) {
        if (is_basic(basis, j) || std::abs(tab(rows_, j)) > eps_) continue;
        Scalar best = Scalar(0);
        bool any = false;
        for (Eigen::Index i = 0; i < rows_; ++i) {
          if (tab(i, j) <= eps_) continue;
          const Scalar ratio = tab(i, rhs_col()) / tab(i, j);
          if (!any || ratio < best - eps_) best = ratio, any = true;
        }
        if (!any) continue;
        for (Eigen::Index i = 0; i < rows_; ++i) {
          if (tab(i, j) <= eps_) continue;
          if (tab(i, rhs_col()) / tab(i, j) > best + eps_) continue;
          MatrixX next = tab;
          std::vector<Eigen::Index> next_basis = basis;
          pivot(next, next_basis, i, j);
          if (seen.insert(sorted(next_basis)).second) queue.emplace_back(std::move(next), next_basis);
        }
      }
    }
    return vertices;
  }

 private:
  void build(const LinearProgram<Scalar>& lp) {
    nx_ = lp.num_variables();
    const Eigen::Index m_eq = lp.eq_lhs.rows();
    const Eigen::Index m_ub = lp.ub_lhs.rows();
    rows_ = m_eq + m_ub;

    // Rows whose rhs is negative are negated; any row without a +1 slack gets
    // an artificial column.
    std::vector<bool> needs_artificial(static_cast<std::size_t>(rows_), false);
    num_artificial_ = 0;
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const bool eq = r < m_eq;
      const Scalar rhs = eq ? lp.eq_rhs(r) : lp.ub_rhs(r - m_eq);
      if (eq || rhs < Scalar(0)) {
        needs_artificial[static_cast<std::size_t>(r)] = true;
        ++num_artificial_;
      }
    }
    num_slack_ = m_ub;
    tableau_ = MatrixX::Zero(rows_ + 1, nx_ + num_slack_ + num_artificial_ + 1);
    basis_.assign(static_cast<std::size_t>(rows_), 0);

    Eigen::Index art = 0;
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const bool eq = r < m_eq;
      Scalar rhs = eq ? lp.eq_rhs(r) : lp.ub_rhs(r - m_eq);
      tableau_.row(r).head(nx_) = eq ? lp.eq_lhs.row(r) : lp.ub_lhs.row(r - m_eq);
      if (!eq) tableau_(r, nx_ + (r - m_eq)) = Scalar(1);
      if (rhs < Scalar(0)) {
        tableau_.row(r) *= Scalar(-1);
        rhs = -rhs;
      }
      tableau_(r, rhs_col()) = rhs;
      if (needs_artificial[static_cast<std::size_t>(r)]) {
        const Eigen::Index col = nx_ + num_slack_ + art++;
        tableau_(r, col) = Scalar(1);
        basis_[static_cast<std::size_t>(r)] = col;
      } else {
        basis_[static_cast<std::size_t>(r)] = nx_ + (r - m_eq);
      }
    }
    costs_ = VectorX::Zero(total_cols());
    costs_.head(nx_) = lp.objective;
    scale_ = std::max(Scalar(1), tableau_.col(rhs_col()).head(rows_).cwiseAbs().maxCoeff());
  }

  Eigen::Index rhs_col() const { return tableau_.cols() - 1; }
  Eigen::Index total_cols() const { return tableau_.cols() - 1; }
  Eigen::Index structural_cols() const { return nx_ + num_slack_; }
  Scalar feasibility_tol() const { return Scalar(1e-9) * scale_; }

  VectorX phase1_costs() const {
    VectorX c = VectorX::Zero(total_cols());
    c.segment(structural_cols(), num_artificial_).setConstant(Scalar(-1));
    return c;
  }

  // Objective row holds reduced costs c_B B^-1 A_j - c_j and the current value.
  void set_objective_row(const VectorX& c) {
    tableau_.row(rows_).setZero();
    tableau_.row(rows_).head(total_cols()) = -c.transpose();
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const Scalar cb = c(basis_[static_cast<std::size_t>(r)]);
      if (cb != Scalar(0)) tableau_.row(rows_) += cb * tableau_.row(r);
    }
  }

  LpStatus iterate(bool allow_artificial, int& iterations) {
    const Eigen::Index limit = allow_artificial ? total_cols() : structural_cols();
    while (true) {
      if (iterations >= max_iterations_) return LpStatus::IterationLimit;
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (tableau_(rows_, j) < -eps_ && !is_basic(basis_, j)) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      Eigen::Index leave = -1;
      Scalar best = Scalar(0);
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const Scalar a = tableau_(i, enter);
        if (a <= eps_) continue;
        const Scalar ratio = tableau_(i, rhs_col()) / a;
        if (leave < 0 || ratio < best - eps_) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + eps_ && basis_[static_cast<std::size_t>(i)] <
                                               basis_[static_cast<std::size_t>(leave)]) {
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(tableau_, basis_, leave, enter);
      ++iterations;
    }
  }

  void drive_out_artificials() {
    for (Eigen::Index r = 0; r < rows_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < structural_cols()) continue;
      for (Eigen::Index j = 0; j < structural_cols(); ++j) {
        if (!is_basic(basis_, j) && std::abs(tableau_(r, j)) > eps_) {
          pivot(tableau_, basis_, r, j);
          break;
        }
      }
      // A row with no structural entry is redundant; its artificial stays at 0.
    }
  }

  static void pivot(MatrixX& tab, std::vector<Eigen::Index>& basis, Eigen::Index row,
                    Eigen::Index col) {
    tab.row(row) /= tab(row, col);
    for (Eigen::Index i = 0; i < tab.rows(); ++i) {
      if (i == row) continue;
      const Scalar f = tab(i, col);
      if (f != Scalar(0)) tab.row(i) -= f * tab.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  }

  static bool is_basic(const std::vector<Eigen::Index>& basis, Eigen::Index j) {
    return std::find(basis.begin(), basis.end(), j) != basis.end();
  }

  static std::vector<Eigen::Index> sorted(std::vector<Eigen::Index> v) {
    std::sort(v.begin(), v.end());
    return v;
  }

  std::vector<Eigen::Index> zero_reduced_cost_columns() const {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < structural_cols(); ++j)
      if (!is_basic(basis_, j) && std::abs(tableau_(rows_, j)) <= eps_) cols.push_back(j);
    return cols;
  }

  VectorX extract_x(const MatrixX& tab, const std::vector<Eigen::Index>& basis) const {
    VectorX x = VectorX::Zero(nx_);
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const Eigen::Index b = basis[static_cast<std::size_t>(r)];
      if (b < nx_) x(b) = std::max(Scalar(0), tab(r, rhs_col()));
    }
    return x;
  }

  VectorX current_x() const { return extract_x(tableau_, basis_); }

  Scalar eps_;
  int max_iterations_;
  Eigen::Index nx_ = 0;
  Eigen::Index rows_ = 0;
  Eigen::Index num_slack_ = 0;
  Eigen::Index num_artificial_ = 0;
  Scalar scale_ = Scalar(1);
  MatrixX tableau_;
  VectorX costs_;
  std::vector<Eigen::Index> basis_;
  bool solved_ = false;
};

}  // namespace fairdiv
