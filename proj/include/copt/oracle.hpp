#ifndef COPT_ORACLE_HPP
#define COPT_ORACLE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "copt/problem.hpp"

namespace copt {

/// A finite-support problem held as explicit tables: L[i] is the loss row
/// of support point i, C[i] its M x |A| constraint matrix.
struct FiniteInstance {
  ActionSpace actions;
  Support support;
  std::vector<Vector> L;
  std::vector<Matrix> C;
  std::vector<std::string> constraint_names;

  /// Weights must sum to one within 1e-12 and every table entry be finite.
  FiniteInstance(ActionSpace actions, Support support, std::vector<Vector> L,
                 std::vector<Matrix> C,
                 std::vector<std::string> constraint_names = {});

  /// Evaluates the oracles of `problem` at every support point.
  static FiniteInstance tabulate(const Problem& problem, const Support& support);

  /// Table-backed problem over the same support.
  Problem to_problem() const;

  std::size_t num_points() const { return support.size(); }
  std::size_t num_actions() const { return actions.size(); }
  std::size_t num_constraints() const { return num_constraints_; }

  /// Exact F(lambda) = sum_i w_i lse(-L_i - C_i^T lambda).
  double dual_value(const Vector& lambda, Temperature beta) const;
  Vector dual_gradient(const Vector& lambda, Temperature beta) const;
  /// Gibbs probabilities at every support point.
  std::vector<Vector> gibbs(const Vector& lambda, Temperature beta) const;
  double risk(const std::vector<Vector>& pi) const;
  /// E[C(X) pi(X)].
  Vector constraint_values(const std::vector<Vector>& pi) const;

 private:
  std::size_t num_constraints_ = 0;
};

enum class OracleStatus { kOptimal, kInfeasible };

/// Exact solution of the constrained LP over randomized classifiers.
/// lambda_star and gamma are read from the optimal basis; gamma holds the
/// constraint slacks -E[C pi*].
struct OracleSolution {
  OracleStatus status = OracleStatus::kInfeasible;
  double lp_value = 0.0;
  Vector lambda_star;
  std::vector<Vector> pi_star;
  Vector gamma;
  std::size_t pivots = 0;
};

/// Dense two-phase simplex with Bland's rule. Requires n |A| <= 1e4.
OracleSolution solve_lp_exact(const FiniteInstance& instance);

struct DualGridSpec {
  double lambda_max = 50.0;
  std::size_t resolution = 200;  // grid cells per axis
};

enum class DualGridStatus { kOk, kBoundary };

struct DualGridResult {
  DualVector lambda;
  double objective;
  DualGridStatus status;
};

/// Minimizes the exact dual over [0, lambda_max]^M for M <= 2. A grid scan
/// is followed by derivative bisection (nested for M = 2), which converges
/// to the box minimizer by convexity. kBoundary flags an optimum on the
/// lambda_max face.
DualGridResult solve_dual_grid(const FiniteInstance& instance, Temperature beta,
                               const DualGridSpec& grid = {});

struct NpBetaCheck {
  double beta;
  Vector lambda_tilde;
  DualGridStatus grid_status;
  double risk;
  double risk_gap;            // risk(pi_tilde) - lp_value
  double gap_bound;           // log|A| / beta
  double max_violation;       // max_j (E[C pi_tilde])_j+
  double mass_outside_argmin; // weighted pi_tilde mass off argmin(L + C^T lambda*)
};

struct NpReport {
  double max_mass_outside_argmin = 0.0;  // pi* mass off argmin(L + C^T lambda*)
  double max_complementary_slackness = 0.0;
  std::vector<NpBetaCheck> betas;
  bool support_ok = false;
  bool slackness_ok = false;
  bool gaps_ok = false;
  bool feasibility_ok = false;

  bool ok() const { return support_ok && slackness_ok && gaps_ok && feasibility_ok; }
};

/// argmin membership uses an absolute tolerance of 1e-9 on L + C^T lambda*;
/// every other check uses 1e-6.
NpReport validate_np_structure(const FiniteInstance& instance,
                               const OracleSolution& solution,
                               const std::vector<double>& betas,
                               const DualGridSpec& grid = {});

}  // namespace copt

#endif  // COPT_ORACLE_HPP
