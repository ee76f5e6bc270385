#include "copt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace copt {

void LabeledData::validate() const {
  if (labels.size() != features.size()) {
    throw std::invalid_argument("labeled data: labels and features differ in length");
  }
  if (!groups.empty()) {
    if (groups.size() != features.size()) {
      throw std::invalid_argument("labeled data: groups and features differ in length");
    }
    for (auto s : groups) {
      if (s >= num_groups) throw std::invalid_argument("labeled data: group out of range");
    }
  }
}

namespace {

std::vector<Vector> probabilities(const RandomizedClassifier& clf,
                                  const LabeledData& data,
                                  const EvalOptions& options) {
  std::vector<Vector> pi;
  pi.reserve(data.size());
  std::mt19937_64 rng(options.seed);
  for (const auto& x : data.features) {
    if (options.sampled) {
      Vector hot = Vector::Zero(static_cast<Eigen::Index>(clf.actions().size()));
      hot(static_cast<Eigen::Index>(clf.sample_action(x, rng))) = 1.0;
      pi.push_back(std::move(hot));
    } else {
      pi.push_back(clf.predict_proba(x));
    }
  }
  return pi;
}

}  // namespace

EvalReport evaluate(const RandomizedClassifier& clf, const LabeledData& data,
                    const EvalOptions& options) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  const auto reject = clf.actions().reject_index();
  const auto pi = probabilities(clf, data, options);
  const double m = static_cast<double>(data.size());
  const auto k = static_cast<Eigen::Index>(clf.actions().size());

  EvalReport report;
  double risk = 0.0;
  double rejected = 0.0;
  double churn = 0.0;
  Vector overall = Vector::Zero(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector& p = pi[i];
    overall += p;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (reject && static_cast<std::size_t>(a) == *reject) continue;
      if (static_cast<std::size_t>(a) != data.labels[i]) risk += p(a);
    }
    if (reject) rejected += p(static_cast<Eigen::Index>(*reject));
    if (options.base_classifier) {
      const auto g = static_cast<Eigen::Index>(options.base_classifier(data.features[i]));
      churn += 1.0 - (g < k ? p(g) : 0.0);
    }
  }
  report.risk = risk / m;
  if (reject) report.rejection_rate = rejected / m;
  if (options.base_classifier) report.churn_rate = churn / m;

  if (!data.groups.empty()) {
    overall /= m;
    std::vector<Vector> group_sum(data.num_groups, Vector::Zero(k));
    std::vector<std::size_t> group_count(data.num_groups, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      group_sum[data.groups[i]] += pi[i];
      ++group_count[data.groups[i]];
    }
    for (std::size_t s = 0; s < data.num_groups; ++s) {
      if (group_count[s] == 0) {
        report.ks_unfairness.emplace_back(std::nullopt);
        continue;
      }
      const Vector mean = group_sum[s] / static_cast<double>(group_count[s]);
      report.ks_unfairness.emplace_back((mean - overall).cwiseAbs().maxCoeff());
    }
  }

  if (options.constraints && options.constraints->num_constraints() > 0) {
    const auto& c = *options.constraints;
    Vector values = Vector::Zero(static_cast<Eigen::Index>(c.num_constraints()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      values += c(data.features[i]) * pi[i];
    }
    values /= m;
    for (Eigen::Index j = 0; j < values.size(); ++j) {
      report.violations.push_back(std::max(0.0, values(j)));
    }
    report.violation_names = c.row_names();
  }
  return report;
}

EvalReport evaluate_truth(const RandomizedClassifier& clf,
                          const FiniteInstance& truth) {
  if (!(clf.actions() == truth.actions)) {
    throw std::invalid_argument("evaluate_truth: action spaces differ");
  }
  std::vector<Vector> pi;
  pi.reserve(truth.num_points());
  for (const auto& x : truth.support.points()) pi.push_back(clf.predict_proba(x));

  EvalReport report;
  report.risk = truth.risk(pi);
  if (const auto r = truth.actions.reject_index()) {
    double rate = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      rate += truth.support.weight(i) * pi[i](static_cast<Eigen::Index>(*r));
    }
    report.rejection_rate = rate;
  }
  if (truth.num_constraints() > 0) {
    const Vector values = truth.constraint_values(pi);
    for (Eigen::Index j = 0; j < values.size(); ++j) {
      report.violations.push_back(std::max(0.0, values(j)));
    }
    report.violation_names = truth.constraint_names;
  }
  return report;
}

std::vector<std::optional<double>> exact_ks_unfairness(
    const RandomizedClassifier& clf, const Support& support,
    const SensitiveProbModel& groups) {
  const auto k = static_cast<Eigen::Index>(clf.actions().size());
  const auto ns = static_cast<Eigen::Index>(groups.num_groups());
  Vector overall = Vector::Zero(k);
  Matrix by_group = Matrix::Zero(ns, k);
  Vector mass = Vector::Zero(ns);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Vector& x = support.point(i);
    const double w = support.weight(i);
    const Vector p = clf.predict_proba(x);
    const Vector tau = groups(x);
    overall += w * p;
    by_group += w * tau * p.transpose();
    mass += w * tau;
  }
  std::vector<std::optional<double>> out;
  for (Eigen::Index s = 0; s < ns; ++s) {
    if (!(mass(s) > 0.0)) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const Vector mean = by_group.row(s).transpose() / mass(s);
    out.emplace_back((mean - overall).cwiseAbs().maxCoeff());
  }
  return out;
}

EvalReport evaluate_set_valued(const SetValuedProblem& problem,
                               const RandomizedClassifier& clf,
                               const LabeledData& data) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  double miss = 0.0;
  double size = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] >= problem.num_classes) {
      throw std::invalid_argument("evaluate: label out of range");
    }
    const Vector incl = inclusion_probabilities(problem, clf, data.features[i]);
    miss += 1.0 - incl(static_cast<Eigen::Index>(data.labels[i]));
    size += incl.sum();
  }
  const double m = static_cast<double>(data.size());
  EvalReport report;
  report.risk = miss / m;
  report.set_size = size / m;
  return report;
}

}  // namespace copt
