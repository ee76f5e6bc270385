#ifndef COPT_CERTIFICATE_HPP
#define COPT_CERTIFICATE_HPP

#include <cstddef>
#include <optional>

#include "copt/problem.hpp"

namespace copt {

/// True loss and constraint oracles, when they are known.
struct TrueOracles {
  LossOracle loss;
  ConstraintOracle constraints;
};

/// Computable right-hand sides of the plug-in risk and violation bounds
/// for the Gibbs classifier at lambda.
///   violation_bound = grad_map_norm + delta_C
///   risk_gap_bound  = (|lambda| + alpha sigma_term) grad_map_norm
///                     + 2 delta_L + delta_C |lambda| + 2 log|A| / beta
/// Without true oracles the delta terms are unavailable and enter as zero,
/// so the bounds then only speak about the plug-in constraints and risk.
struct Certificate {
  double grad_map_norm = 0.0;
  std::optional<double> delta_L;
  std::optional<double> delta_C;
  double lambda_norm = 0.0;
  StepSize alpha{1.0};
  Temperature beta{1.0};
  double sigma_term = 0.0;  // E ||C_hat(X)||_{1->2}
  std::size_t num_actions = 0;
  double violation_bound = 0.0;
  double risk_gap_bound = 0.0;

  bool deltas_available() const { return delta_L.has_value() && delta_C.has_value(); }
};

/// Exact expectations over `support`; the gradient mapping uses the exact
/// gradient of the plug-in dual at the classifier's lambda.
Certificate certify(const RandomizedClassifier& clf, const Support& support,
                    StepSize alpha,
                    const std::optional<TrueOracles>& truth = std::nullopt);

/// sqrt(sum_j (C_j(pi))_+^2) under the given constraint oracle.
double measured_violation(const RandomizedClassifier& clf,
                          const ConstraintOracle& constraints,
                          const Support& support);

}  // namespace copt

#endif  // COPT_CERTIFICATE_HPP
