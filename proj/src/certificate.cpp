#include "copt/certificate.hpp"

#include <cmath>

#include "copt/estimators.hpp"

namespace copt {

Certificate certify(const RandomizedClassifier& clf, const Support& support,
                    StepSize alpha, const std::optional<TrueOracles>& truth) {
  const Problem& problem = clf.problem();
  const Vector& lambda = clf.lambda().values();
  Certificate cert;
  cert.alpha = alpha;
  cert.beta = clf.beta();
  cert.num_actions = problem.num_actions();
  cert.lambda_norm = lambda.norm();

  if (problem.num_constraints() > 0) {
    const Vector grad = exact_gradient(problem, lambda, support, clf.beta());
    cert.grad_map_norm = gradient_mapping(lambda, grad, alpha).norm();
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    cert.sigma_term +=
        support.weight(i) * norm_1_to_2(problem.constraints(support.point(i)));
  }

  double delta_l = 0.0;
  double delta_c = 0.0;
  if (truth) {
    const auto errors = estimation_errors(problem.loss, problem.constraints,
                                          truth->loss, truth->constraints, support);
    delta_l = errors.delta_loss;
    delta_c = errors.delta_constraint;
    cert.delta_L = delta_l;
    cert.delta_C = delta_c;
  }

  cert.violation_bound = cert.grad_map_norm + delta_c;
  cert.risk_gap_bound =
      (cert.lambda_norm + alpha.value() * cert.sigma_term) * cert.grad_map_norm +
      2.0 * delta_l + delta_c * cert.lambda_norm +
      2.0 * std::log(static_cast<double>(cert.num_actions)) / cert.beta.value();
  return cert;
}

double measured_violation(const RandomizedClassifier& clf,
                          const ConstraintOracle& constraints,
                          const Support& support) {
  if (constraints.num_constraints() == 0) return 0.0;
  return positive_part(constraint_values(clf, constraints, support)).norm();
}

}  // namespace copt
