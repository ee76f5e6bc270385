#include "copt/synthetic.hpp"

#include <memory>
#include <random>
#include <stdexcept>

namespace copt {

void SyntheticSpec::validate() const {
  if (dim == 0) throw std::invalid_argument("synthetic.dim must be positive");
  if (num_classes < 2) throw std::invalid_argument("synthetic.num_classes must be >= 2");
  if (num_groups == 1) {
    throw std::invalid_argument("synthetic.num_groups must be 0 or >= 2");
  }
  if (support_size == 0) {
    throw std::invalid_argument("synthetic.support_size must be positive");
  }
  if (!std::isfinite(separation) || !std::isfinite(group_shift) ||
      !std::isfinite(group_strength)) {
    throw std::invalid_argument("synthetic: scale parameters must be finite");
  }
}

std::size_t SyntheticData::num_classes() const {
  return static_cast<std::size_t>(label_marginals.size());
}

std::size_t SyntheticData::num_groups() const {
  return static_cast<std::size_t>(group_marginals.size());
}

ClassProbModel SyntheticData::class_model() const {
  return ClassProbModel::table(support.points(), class_probs, "true class probabilities");
}

SensitiveProbModel SyntheticData::group_model() const {
  if (group_probs.empty()) throw std::invalid_argument("synthetic data has no groups");
  auto index = std::make_shared<PointIndex>(support.points());
  auto rows = std::make_shared<std::vector<Vector>>(group_probs);
  return SensitiveProbModel(
      num_groups(),
      [index, rows](const Vector& x) -> Vector {
        const auto row = index->find(x);
        if (!row) throw EvaluationError("true group probabilities: point not in table");
        return (*rows)[*row];
      },
      group_marginals, "true group probabilities");
}

JointProbModel SyntheticData::joint_model() const {
  if (group_probs.empty()) throw std::invalid_argument("synthetic data has no groups");
  auto index = std::make_shared<PointIndex>(support.points());
  auto p = std::make_shared<std::vector<Vector>>(class_probs);
  auto tau = std::make_shared<std::vector<Vector>>(group_probs);
  JointProbModel joint;
  joint.fn = [index, p, tau](const Vector& x) -> Matrix {
    const auto row = index->find(x);
    if (!row) throw EvaluationError("true joint probabilities: point not in table");
    return (*tau)[*row] * (*p)[*row].transpose();
  };
  joint.joint_marginals = joint_marginals;
  joint.label_marginals = label_marginals;
  return joint;
}

FiniteInstance SyntheticData::instance(const Problem& problem) const {
  return FiniteInstance::tabulate(problem, support);
}

SyntheticData synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_class(0, spec.num_classes - 1);
  const std::size_t groups = spec.num_groups;
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const auto k = static_cast<Eigen::Index>(spec.num_classes);

  std::vector<Vector> centres;
  for (Eigen::Index y = 0; y < k; ++y) {
    Vector mu = Vector::Zero(d);
    // Classes beyond dim reuse axes with alternating sign.
    mu(y % d) = ((y / d) % 2 == 0 ? 1.0 : -1.0) * spec.separation;
    centres.push_back(mu);
  }

  std::vector<Vector> points;
  std::vector<Vector> p;
  std::vector<Vector> tau;
  const Temperature unit(1.0);
  for (std::size_t i = 0; i < spec.support_size; ++i) {
    const std::size_t c = pick_class(rng);
    Vector x = centres[c];
    for (Eigen::Index j = 0; j < d; ++j) x(j) += gauss(rng);
    if (groups > 0) {
      std::uniform_int_distribution<std::size_t> pick_group(0, groups - 1);
      x(0) += spec.group_shift * static_cast<double>(pick_group(rng));
    }
    Vector logits(k);
    for (Eigen::Index y = 0; y < k; ++y) logits(y) = spec.separation * centres[y].dot(x);
    p.push_back(softmax(logits, unit));
    if (groups > 0) {
      Vector g(static_cast<Eigen::Index>(groups));
      const double centre = 0.5 * static_cast<double>(groups - 1);
      for (std::size_t s = 0; s < groups; ++s) {
        g(static_cast<Eigen::Index>(s)) =
            spec.group_strength * x(0) * (static_cast<double>(s) - centre);
      }
      tau.push_back(softmax(g, unit));
    }
    points.push_back(std::move(x));
  }

  SyntheticData data{Support::uniform(points), std::move(p), std::move(tau),
                     Vector::Zero(k), Vector(), Matrix(), LabeledData{}};
  const double w = 1.0 / static_cast<double>(spec.support_size);
  for (const auto& row : data.class_probs) data.label_marginals += w * row;
  if (groups > 0) {
    const auto g = static_cast<Eigen::Index>(groups);
    data.group_marginals = Vector::Zero(g);
    data.joint_marginals = Matrix::Zero(g, k);
    for (std::size_t i = 0; i < spec.support_size; ++i) {
      data.group_marginals += w * data.group_probs[i];
      data.joint_marginals += w * data.group_probs[i] * data.class_probs[i].transpose();
    }
  }

  LabeledData& s = data.samples;
  s.num_groups = groups;
  std::uniform_int_distribution<std::size_t> pick_point(0, spec.support_size - 1);
  for (std::size_t n = 0; n < spec.num_samples; ++n) {
    const std::size_t i = pick_point(rng);
    const Vector& py = data.class_probs[i];
    std::discrete_distribution<std::size_t> draw_y(py.data(), py.data() + py.size());
    s.features.push_back(data.support.point(i));
    s.labels.push_back(draw_y(rng));
    if (groups > 0) {
      const Vector& ps = data.group_probs[i];
      std::discrete_distribution<std::size_t> draw_s(ps.data(), ps.data() + ps.size());
      s.groups.push_back(draw_s(rng));
    }
  }
  return data;
}

}  // namespace copt
