#include "copt/core_math.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace copt {

Temperature::Temperature(double beta) : beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("temperature must be positive and finite, got " +
                                std::to_string(beta));
  }
}

StepSize::StepSize(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("step size must be positive and finite, got " +
                                std::to_string(alpha));
  }
}

double lse(const Vector& w, Temperature beta) {
  if (w.size() == 0) throw std::domain_error("lse of an empty vector");
  const double b = beta.value();
  const double top = w.maxCoeff();
  const double sum = (b * (w.array() - top)).exp().sum();
  return top + std::log(sum) / b;
}

Vector softmax(const Vector& w, Temperature beta) {
  if (w.size() == 0) throw std::domain_error("softmax of an empty vector");
  const double top = w.maxCoeff();
  Vector e = (beta.value() * (w.array() - top)).exp().matrix();
  return e / e.sum();
}

Vector positive_part(const Vector& v) { return v.cwiseMax(0.0); }

Vector gradient_mapping(const Vector& lambda, const Vector& grad,
                        StepSize alpha) {
  if (lambda.size() != grad.size()) {
    throw std::invalid_argument("gradient_mapping: dimension mismatch");
  }
  if (lambda.size() > 0 && lambda.minCoeff() < 0.0) {
    throw std::invalid_argument(
        "gradient_mapping: lambda must be componentwise nonnegative");
  }
  const double a = alpha.value();
  return (lambda - positive_part(lambda - a * grad)) / a;
}

double norm_1_to_2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.colwise().norm().maxCoeff();
}

}  // namespace copt
