#ifndef COPT_EVALUATION_HPP
#define COPT_EVALUATION_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "copt/constraints.hpp"
#include "copt/oracle.hpp"
#include "copt/problem.hpp"

namespace copt {

/// Features with class labels and, optionally, group labels in
/// [0, num_groups).
struct LabeledData {
  std::vector<Vector> features;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> groups;  // empty when there is no group attribute
  std::size_t num_groups = 0;

  std::size_t size() const { return features.size(); }
  /// Throws std::invalid_argument on ragged columns or out-of-range groups.
  void validate() const;
};

/// Metrics of a classifier. Each field is set only when it applies; all
/// rates lie in [0, 1].
struct EvalReport {
  std::optional<double> risk;
  std::optional<double> rejection_rate;
  /// One entry per group; nullopt for a group with no test mass.
  std::vector<std::optional<double>> ks_unfairness;
  std::optional<double> churn_rate;
  std::optional<double> set_size;
  std::vector<double> violations;  // (C_j(pi))_+
  std::vector<std::string> violation_names;
};

struct EvalOptions {
  std::function<std::size_t(const Vector&)> base_classifier;  // churn reference
  /// Constraint oracle for the violation entries, averaged over the test
  /// features with uniform weights.
  std::optional<ConstraintOracle> constraints;
  /// Replace pi(.|x) by a one-hot draw from it.
  bool sampled = false;
  std::uint64_t seed = 0;
};

/// Test-set metrics from the expected probabilities pi(a|x):
///   risk         mean sum_{a != y, a not reject} pi(a|x)
///   rejection    mean pi(r|x)
///   KS_s         max_a |mean_{S=s} pi(a|x) - mean pi(a|x)|
///   churn        mean sum_{a != g(x)} pi(a|x)
EvalReport evaluate(const RandomizedClassifier& clf, const LabeledData& data,
                    const EvalOptions& options = {});

/// Exact metrics over a finite truth table: risk under the true loss rows,
/// violations of the true constraints, and the rejection rate when the
/// action space has a reject symbol.
EvalReport evaluate_truth(const RandomizedClassifier& clf,
                          const FiniteInstance& truth);

/// Population KS unfairness on a weighted support with group posteriors:
/// max_a |E[pi(a|X) | S=s] - E[pi(a|X)]|, where E[. | S=s] weights point i by
/// w_i tau_s(x_i). nullopt for a group of zero mass.
std::vector<std::optional<double>> exact_ks_unfairness(
    const RandomizedClassifier& clf, const Support& support,
    const SensitiveProbModel& groups);

/// Set-valued metrics: miscoverage mean 1 - pi_y(x) and mean set size.
EvalReport evaluate_set_valued(const SetValuedProblem& problem,
                               const RandomizedClassifier& clf,
                               const LabeledData& data);

}  // namespace copt

#endif  // COPT_EVALUATION_HPP
