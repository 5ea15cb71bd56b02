#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairdiv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Absolute tolerance on column sums of a feasible allocation.
inline constexpr double kFeasibilityTol = 1e-9;
/// Default threshold separating solver dust from genuine fractional shares.
inline constexpr double kSplitTol = 1e-6;

// Error taxonomy shared by all modules. Report-style operations never throw.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StructuralError : Error {
  using Error::Error;
};
struct FeasibilityError : Error {
  FeasibilityError(const std::string& what, Eigen::Index good)
      : Error(what), good_index(good) {}
  Eigen::Index good_index;
};
struct ModelError : Error {
  using Error::Error;
};
struct ScopeError : Error {
  using Error::Error;
};

struct Good {
  std::string id;
  std::string label;
  std::optional<double> market_value;
};

struct Agent {
  std::string id;
  std::string label;
  double weight = 1.0;
};

/// The triplet (agents, goods, utilities). Rows index agents, columns goods.
struct DivisionProblem {
  std::vector<Agent> agents;
  std::vector<Good> goods;
  Matrix utilities;

  Eigen::Index num_agents() const { return static_cast<Eigen::Index>(agents.size()); }
  Eigen::Index num_goods() const { return static_cast<Eigen::Index>(goods.size()); }

  Vector weights() const;
  /// Per-agent utility for the entire asset.
  Vector totals() const { return utilities.rowwise().sum(); }
  /// Market values m_a; throws StructuralError if any good lacks one.
  Vector market_values() const;
  bool has_market_values() const;

  Eigen::Index agent_index(const std::string& id) const;
  Eigen::Index good_index(const std::string& id) const;
};

/// Share matrix z with z(i, a) the fraction of good a held by agent i.
class Allocation {
 public:
  Allocation() = default;
  explicit Allocation(Matrix shares) : shares_(std::move(shares)) {}

  static Allocation zeros(Eigen::Index agents, Eigen::Index goods) {
    return Allocation(Matrix::Zero(agents, goods));
  }

  const Matrix& shares() const { return shares_; }
  Matrix& shares() { return shares_; }
  double operator()(Eigen::Index i, Eigen::Index a) const { return shares_(i, a); }
  double& operator()(Eigen::Index i, Eigen::Index a) { return shares_(i, a); }

  Eigen::Index num_agents() const { return shares_.rows(); }
  Eigen::Index num_goods() const { return shares_.cols(); }

  /// Throws FeasibilityError naming the first good whose column misses 1
  /// by more than tol, or any entry outside [-1e-12, 1 + 1e-12].
  void check_feasible(double tol = kFeasibilityTol) const;
  bool is_feasible(double tol = kFeasibilityTol) const;

  /// Clamp into [0, 1] and rescale each column to sum to exactly 1 (up to
  /// rounding). Applied once to every solver output.
  Allocation cleaned() const;

 private:
  Matrix shares_;
};

struct UtilityProfile {
  Vector values;      // U_i
  Vector normalized;  // U_i / sum_a u_ia
};

UtilityProfile evaluate(const DivisionProblem& problem, const Allocation& alloc);

/// Number of goods held in shares of (tol, 1 - tol) by at least two agents.
int split_count(const Allocation& alloc, double tol = kSplitTol);

/// Number of strictly positive shares (support size).
int support_size(const Allocation& alloc, double tol = kSplitTol);

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<Violation> warnings;

  bool ok() const { return violations.empty(); }
  bool has(const std::string& code) const;
};

ValidationReport validate_problem(const DivisionProblem& problem);

/// Throws StructuralError or ModelError when validate_problem reports violations.
void require_valid(const DivisionProblem& problem);

}  // namespace fairdiv
