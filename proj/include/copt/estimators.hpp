#ifndef COPT_ESTIMATORS_HPP
#define COPT_ESTIMATORS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "copt/constraints.hpp"
#include "copt/problem.hpp"

namespace copt {

enum class KernelShape { kBox, kEpanechnikov, kGaussian };

KernelShape parse_kernel_shape(const std::string& name);
std::string to_string(KernelShape shape);

/// Radial kernel K(u) = k(||u||) with bandwidth h > 0.
class KernelSpec {
 public:
  KernelSpec(KernelShape shape, double bandwidth);
  KernelShape shape() const { return shape_; }
  double bandwidth() const { return bandwidth_; }
  /// K((xi - x) / h), unnormalized.
  double weight(const Vector& xi, const Vector& x) const;

 private:
  KernelShape shape_;
  double bandwidth_;
};

/// h = n^{-1 / (2 degree + 2 + d)}.
double rule_of_thumb_bandwidth(std::size_t n, std::size_t degree,
                               std::size_t dim);

/// Local polynomial regression of a (typically binary) response. At each
/// query x it fits a polynomial of total degree <= degree in (X_i - x) by
/// kernel-weighted least squares and reports the constant term, clipped to
/// [0, 1]. Returns 0 when the normal equations are rank deficient
/// (eigenvalues below 1e-10 * trace), which includes the case of no
/// kernel-positive neighbours.
class LocalPolyModel {
 public:
  LocalPolyModel(std::size_t degree, KernelSpec kernel,
                 std::vector<Vector> features, std::vector<double> responses);

  double predict(const Vector& x) const;
  /// Same fit without the final clipping.
  double predict_unclipped(const Vector& x) const;

  std::size_t degree() const { return degree_; }
  const KernelSpec& kernel() const { return kernel_; }

 private:
  std::size_t degree_;
  KernelSpec kernel_;
  std::vector<Vector> features_;
  std::vector<double> responses_;
  std::vector<std::vector<std::size_t>> exponents_;  // monomial multi-indices
};

/// K one-vs-all local polynomial fits on (X_i, 1{Y_i = y}); outputs are
/// renormalized to sum to one, uniform when every fit returns zero.
ClassProbModel one_vs_all(const std::vector<std::size_t>& labels,
                          const std::vector<Vector>& features,
                          std::size_t num_classes, std::size_t degree,
                          const KernelSpec& kernel);

/// Empirical frequencies of labels in [0, num_classes).
Vector empirical_marginals(const std::vector<std::size_t>& labels,
                           std::size_t num_classes);

struct EstimationErrors {
  double delta_loss;        // E ||L - L_hat||_inf
  double delta_constraint;  // sqrt(E ||C - C_hat||_{1->2}^2)
};

EstimationErrors estimation_errors(const LossOracle& estimated_loss,
                                   const ConstraintOracle& estimated_constraints,
                                   const LossOracle& true_loss,
                                   const ConstraintOracle& true_constraints,
                                   const Support& support);

}  // namespace copt

#endif  // COPT_ESTIMATORS_HPP
