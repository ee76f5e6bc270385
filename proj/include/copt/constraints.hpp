#ifndef COPT_CONSTRAINTS_HPP
#define COPT_CONSTRAINTS_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "copt/problem.hpp"

namespace copt {

/// x -> estimate of (P(Y = y | X = x))_y. Outputs are validated on every
/// call: entries in [0, 1], summing to one within 1e-9.
class ClassProbModel {
 public:
  using Fn = std::function<Vector(const Vector&)>;

  ClassProbModel(std::size_t num_classes, Fn fn,
                 std::string name = "class probability model");
  static ClassProbModel table(const std::vector<Vector>& points,
                              std::vector<Vector> rows,
                              std::string name = "class probability table");

  Vector operator()(const Vector& x) const;
  std::size_t num_classes() const { return num_classes_; }
  const std::string& name() const { return name_; }

 private:
  std::size_t num_classes_;
  Fn fn_;
  std::string name_;
};

/// x -> estimate of (P(S = s | W = w))_s together with the marginals
/// P(S = s), which must be strictly positive.
class SensitiveProbModel {
 public:
  using Fn = std::function<Vector(const Vector&)>;

  SensitiveProbModel(std::size_t num_groups, Fn fn, Vector marginals,
                     std::string name = "group probability model");

  /// Group attribute available at inference: tau_s(x) = 1{x[feature] = s}.
  static SensitiveProbModel aware(std::size_t feature_index, Vector marginals);

  Vector operator()(const Vector& x) const;
  std::size_t num_groups() const { return num_groups_; }
  const Vector& marginals() const { return marginals_; }

 private:
  std::size_t num_groups_;
  Fn fn_;
  Vector marginals_;
  std::string name_;
};

/// x -> |S| x K matrix of P((S, Y) = (s, y) | X = x), with the marginals
/// P((S, Y) = (s, y)) and P(Y = y).
struct JointProbModel {
  std::function<Matrix(const Vector&)> fn;
  Matrix joint_marginals;
  Vector label_marginals;
};

/// Budgets and slacks of the constraint families. A field only needs to
/// be set for the family that reads it.
struct SlackParams {
  std::vector<double> eps;
  std::optional<double> rejection_budget;
  std::optional<double> error_budget;
  std::optional<double> churn_budget;
  std::optional<double> size_budget;
  std::optional<double> risk_budget;

  /// Throws std::invalid_argument naming the first field out of range.
  void validate(std::size_t num_classes) const;
};

/// A = [K], l(x, a) = 1 - p_a(x), no constraints.
Problem build_standard(const ClassProbModel& probs);

/// A = [K] + {r}. Loss 1 - p_a off the reject action, 0 on it. One
/// constraint: 1{a = r} - budget.
Problem build_controlled_rejection(const ClassProbModel& probs, double budget);

/// A = [K] + {r}. Loss 1{a = r}; one constraint (1 - p_a) 1{a != r} - budget.
Problem build_controlled_error(const ClassProbModel& probs, double budget);

/// 2 |S| K rows ordered (sign, s, y), "+" rows first:
///   +: (tau_s(x) / P(S=s) - 1) 1{a = y} - eps_s
///   -: (1 - tau_s(x) / P(S=s)) 1{a = y} - eps_s
Problem build_demographic_parity(const ClassProbModel& probs,
                                 const SensitiveProbModel& groups,
                                 const std::vector<double>& eps);

/// 2 |S| K^2 rows ordered (sign, y, s, y'). eps is indexed by (s, y') in
/// row-major order, size |S| K.
Problem build_equalized_odds(const ClassProbModel& probs,
                             const JointProbModel& joint,
                             const std::vector<double>& eps);

/// One constraint 1{a != g(x)} - budget with the standard loss.
Problem build_churn(const ClassProbModel& probs,
                    std::function<std::size_t(const Vector&)> base_classifier,
                    double budget);

/// Stacks constraint rows of problems sharing an action space. The loss
/// is taken from the first problem.
Problem combine(const std::vector<Problem>& problems);

enum class SetValuedMode { kSizeBudget, kRiskBudget };

struct SetValuedChurn {
  std::function<std::size_t(const Vector&)> base_classifier;
  double budget;
};

/// Set-valued classification with independent per-label inclusion.
///
/// The decision pi: X -> [0,1]^K is encoded as a two-action ("out", "in")
/// problem over augmented points (x, y): the feature vector with the label
/// index appended. Over augmented supports with weights w_i / K, the
/// coordinate problem's risk and constraints are exactly 1/K times the
/// set-valued ones, so the usual dual machinery applies unchanged.
struct SetValuedProblem {
  std::size_t num_classes;
  SetValuedMode mode;
  double budget;
  Problem coordinate_problem;

  Vector augment(const Vector& x, std::size_t label) const;
  std::vector<Vector> augment(const std::vector<Vector>& xs) const;
  /// Each point expands to K augmented points carrying weight w_i / K.
  Support augment(const Support& support) const;
};

SetValuedProblem build_set_valued(const ClassProbModel& probs,
                                  SetValuedMode mode, double budget,
                                  std::optional<SetValuedChurn> churn = {});

/// Inclusion probabilities pi_y(x) of a classifier trained on the
/// coordinate problem.
Vector inclusion_probabilities(const SetValuedProblem& problem,
                               const RandomizedClassifier& clf,
                               const Vector& x);

using InclusionFn = std::function<Vector(const Vector&)>;

/// E[sum_y p_y(X) (1 - pi_y(X))].
double set_risk(const InclusionFn& pi, const ClassProbModel& probs,
                const Support& support);
/// E[sum_y pi_y(X)].
double set_size(const InclusionFn& pi, const Support& support);

}  // namespace copt

#endif  // COPT_CONSTRAINTS_HPP
