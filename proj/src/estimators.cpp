#include "copt/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>

namespace copt {

namespace {

// All multi-indices of total degree <= degree in dim variables; the zero
// index comes first.
std::vector<std::vector<std::size_t>> monomials(std::size_t dim,
                                                std::size_t degree) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current(dim, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t var,
                                                          std::size_t left) {
    if (var == dim) {
      out.push_back(current);
      return;
    }
    for (std::size_t e = 0; e <= left; ++e) {
      current[var] = e;
      rec(var + 1, left - e);
    }
    current[var] = 0;
  };
  rec(0, degree);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    std::size_t sa = 0, sb = 0;
    for (auto e : a) sa += e;
    for (auto e : b) sb += e;
    return sa < sb;
  });
  return out;
}

}  // namespace

KernelShape parse_kernel_shape(const std::string& name) {
  if (name == "box") return KernelShape::kBox;
  if (name == "epanechnikov") return KernelShape::kEpanechnikov;
  if (name == "gaussian") return KernelShape::kGaussian;
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

std::string to_string(KernelShape shape) {
  switch (shape) {
    case KernelShape::kBox: return "box";
    case KernelShape::kEpanechnikov: return "epanechnikov";
    case KernelShape::kGaussian: return "gaussian";
  }
  return "unknown";
}

KernelSpec::KernelSpec(KernelShape shape, double bandwidth)
    : shape_(shape), bandwidth_(bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw std::invalid_argument("kernel bandwidth must be positive and finite");
  }
}

double KernelSpec::weight(const Vector& xi, const Vector& x) const {
  const double r2 = (xi - x).squaredNorm() / (bandwidth_ * bandwidth_);
  switch (shape_) {
    case KernelShape::kBox: return r2 <= 1.0 ? 1.0 : 0.0;
    case KernelShape::kEpanechnikov: return r2 < 1.0 ? 0.75 * (1.0 - r2) : 0.0;
    case KernelShape::kGaussian: return std::exp(-0.5 * r2);
  }
  return 0.0;
}

double rule_of_thumb_bandwidth(std::size_t n, std::size_t degree,
                               std::size_t dim) {
  if (n == 0) throw std::invalid_argument("bandwidth: no data");
  const double exponent = -1.0 / static_cast<double>(2 * degree + 2 + dim);
  return std::pow(static_cast<double>(n), exponent);
}

LocalPolyModel::LocalPolyModel(std::size_t degree, KernelSpec kernel,
                               std::vector<Vector> features,
                               std::vector<double> responses)
    : degree_(degree),
      kernel_(kernel),
      features_(std::move(features)),
      responses_(std::move(responses)) {
  if (features_.empty()) throw std::invalid_argument("local poly: empty training set");
  if (features_.size() != responses_.size()) {
    throw std::invalid_argument("local poly: features and responses differ");
  }
  const auto dim = static_cast<std::size_t>(features_.front().size());
  for (const auto& f : features_) {
    if (static_cast<std::size_t>(f.size()) != dim) {
      throw std::invalid_argument("local poly: ragged feature vectors");
    }
  }
  exponents_ = monomials(dim, degree_);
}

double LocalPolyModel::predict_unclipped(const Vector& x) const {
  const auto p = static_cast<Eigen::Index>(exponents_.size());
  Matrix gram = Matrix::Zero(p, p);
  Vector rhs = Vector::Zero(p);
  Vector phi(p);
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const double w = kernel_.weight(features_[i], x);
    if (w <= 0.0) continue;
    const Vector u = features_[i] - x;
    for (Eigen::Index k = 0; k < p; ++k) {
      double v = 1.0;
      const auto& e = exponents_[static_cast<std::size_t>(k)];
      for (std::size_t d = 0; d < e.size(); ++d) {
        for (std::size_t r = 0; r < e[d]; ++r) v *= u(static_cast<Eigen::Index>(d));
      }
      phi(k) = v;
    }
    gram.noalias() += w * phi * phi.transpose();
    rhs.noalias() += (w * responses_[i]) * phi;
  }
  const double trace = gram.trace();
  if (!(trace > 0.0)) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.eigenvalues().minCoeff() <= 1e-10 * trace) return 0.0;
  const Vector theta =
      eig.eigenvectors() *
      (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues());
  return theta(0);
}

double LocalPolyModel::predict(const Vector& x) const {
  return std::clamp(predict_unclipped(x), 0.0, 1.0);
}

ClassProbModel one_vs_all(const std::vector<std::size_t>& labels,
                          const std::vector<Vector>& features,
                          std::size_t num_classes, std::size_t degree,
                          const KernelSpec& kernel) {
  if (num_classes < 2) throw std::invalid_argument("one_vs_all: need K >= 2");
  if (labels.empty() || features.empty()) {
    throw std::invalid_argument("one_vs_all: empty data");
  }
  if (labels.size() != features.size()) {
    throw std::invalid_argument("one_vs_all: labels and features differ");
  }
  auto models = std::make_shared<std::vector<LocalPolyModel>>();
  for (std::size_t y = 0; y < num_classes; ++y) {
    std::vector<double> indicator(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= num_classes) {
        throw std::invalid_argument("one_vs_all: label out of range");
      }
      indicator[i] = labels[i] == y ? 1.0 : 0.0;
    }
    models->emplace_back(degree, kernel, features, std::move(indicator));
  }
  return ClassProbModel(
      num_classes,
      [models, num_classes](const Vector& x) {
        Vector p(static_cast<Eigen::Index>(num_classes));
        for (std::size_t y = 0; y < num_classes; ++y) {
          p(static_cast<Eigen::Index>(y)) = (*models)[y].predict(x);
        }
        const double total = p.sum();
        if (total <= 0.0) {
          return Vector(Vector::Constant(p.size(), 1.0 / static_cast<double>(p.size())));
        }
        return Vector(p / total);
      },
      "one-vs-all local polynomial");
}

Vector empirical_marginals(const std::vector<std::size_t>& labels,
                           std::size_t num_classes) {
  if (labels.empty()) throw std::invalid_argument("empirical_marginals: no labels");
  Vector freq = Vector::Zero(static_cast<Eigen::Index>(num_classes));
  for (auto y : labels) {
    if (y >= num_classes) throw std::invalid_argument("label out of range");
    freq(static_cast<Eigen::Index>(y)) += 1.0;
  }
  return freq / static_cast<double>(labels.size());
}

EstimationErrors estimation_errors(const LossOracle& estimated_loss,
                                   const ConstraintOracle& estimated_constraints,
                                   const LossOracle& true_loss,
                                   const ConstraintOracle& true_constraints,
                                   const Support& support) {
  if (estimated_loss.num_actions() != true_loss.num_actions() ||
      estimated_constraints.num_constraints() != true_constraints.num_constraints() ||
      estimated_constraints.num_actions() != true_constraints.num_actions()) {
    throw std::invalid_argument("estimation_errors: shape mismatch");
  }
  double dl = 0.0;
  double dc2 = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Vector& x = support.point(i);
    const double w = support.weight(i);
    dl += w * (true_loss(x) - estimated_loss(x)).cwiseAbs().maxCoeff();
    if (true_constraints.num_constraints() > 0) {
      const double n = norm_1_to_2(true_constraints(x) - estimated_constraints(x));
      dc2 += w * n * n;
    }
  }
  return {dl, std::sqrt(dc2)};
}

}  // namespace copt
