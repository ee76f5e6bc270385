#ifndef COPT_CORE_MATH_HPP
#define COPT_CORE_MATH_HPP

#include <Eigen/Dense>

namespace copt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Entropic regularization strength. Always positive and finite.
class Temperature {
 public:
  explicit Temperature(double beta);
  double value() const { return beta_; }

 private:
  double beta_;
};

/// Step of the gradient mapping. Always positive and finite.
class StepSize {
 public:
  explicit StepSize(double alpha);
  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// beta^{-1} log sum_j exp(beta w_j), evaluated with a max shift so that no
/// exponent is positive. Throws std::domain_error on an empty vector.
double lse(const Vector& w, Temperature beta);

/// Gradient of lse: the softmax of beta * w. Entries are positive and sum
/// to one; the result is invariant under adding a constant to w.
Vector softmax(const Vector& w, Temperature beta);

Vector positive_part(const Vector& v);

/// (lambda - (lambda - alpha * grad)_+) / alpha, i.e. componentwise
/// min(lambda_j / alpha, grad_j). lambda must be componentwise nonnegative.
Vector gradient_mapping(const Vector& lambda, const Vector& grad,
                        StepSize alpha);

/// Subordinate l1 -> l2 norm: the largest Euclidean column norm.
double norm_1_to_2(const Matrix& a);

}  // namespace copt

#endif  // COPT_CORE_MATH_HPP
