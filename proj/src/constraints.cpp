#include "copt/constraints.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <utility>

namespace copt {

namespace {

void check_unit_budget(double budget, const char* what) {
  if (!(budget > 0.0 && budget < 1.0)) {
    std::ostringstream msg;
    msg << what << " must lie in (0, 1), got " << budget;
    throw std::invalid_argument(msg.str());
  }
}

Vector standard_loss(const Vector& p) { return Vector::Ones(p.size()) - p; }

std::string pair_name(const char* tag, char sign, const std::string& body) {
  return std::string(tag) + sign + "(" + body + ")";
}

}  // namespace

ClassProbModel::ClassProbModel(std::size_t num_classes, Fn fn, std::string name)
    : num_classes_(num_classes), fn_(std::move(fn)), name_(std::move(name)) {
  if (num_classes_ < 2) throw std::invalid_argument("need at least two classes");
  if (!fn_) throw std::invalid_argument("class probability model without a function");
}

ClassProbModel ClassProbModel::table(const std::vector<Vector>& points,
                                     std::vector<Vector> rows,
                                     std::string name) {
  if (rows.empty() || rows.size() != points.size()) {
    throw std::invalid_argument("probability table: points and rows differ");
  }
  const auto k = static_cast<std::size_t>(rows.front().size());
  auto index = std::make_shared<PointIndex>(points);
  auto data = std::make_shared<std::vector<Vector>>(std::move(rows));
  std::string label = name;
  return ClassProbModel(
      k,
      [index, data, label](const Vector& x) -> Vector {
        auto row = index->find(x);
        if (!row) throw EvaluationError(label + ": point not in table");
        return (*data)[*row];
      },
      std::move(name));
}

Vector ClassProbModel::operator()(const Vector& x) const {
  Vector p = fn_(x);
  if (static_cast<std::size_t>(p.size()) != num_classes_) {
    throw EvaluationError(name_ + ": wrong number of classes");
  }
  if (!p.allFinite() || p.minCoeff() < 0.0 || p.maxCoeff() > 1.0 ||
      std::abs(p.sum() - 1.0) > 1e-9) {
    throw EvaluationError(name_ + ": output is not a probability vector");
  }
  return p;
}

SensitiveProbModel::SensitiveProbModel(std::size_t num_groups, Fn fn,
                                       Vector marginals, std::string name)
    : num_groups_(num_groups),
      fn_(std::move(fn)),
      marginals_(std::move(marginals)),
      name_(std::move(name)) {
  if (num_groups_ == 0) throw std::invalid_argument("need at least one group");
  if (static_cast<std::size_t>(marginals_.size()) != num_groups_) {
    throw std::invalid_argument("group marginals have the wrong length");
  }
  for (Eigen::Index s = 0; s < marginals_.size(); ++s) {
    if (!(marginals_(s) > 0.0)) {
      throw std::invalid_argument("group marginal P(S=" + std::to_string(s) +
                                  ") must be positive");
    }
  }
  if (std::abs(marginals_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("group marginals must sum to one");
  }
}

SensitiveProbModel SensitiveProbModel::aware(std::size_t feature_index,
                                             Vector marginals) {
  const auto groups = static_cast<std::size_t>(marginals.size());
  return SensitiveProbModel(
      groups,
      [feature_index, groups](const Vector& x) -> Vector {
        if (static_cast<Eigen::Index>(feature_index) >= x.size()) {
          throw EvaluationError("aware group model: feature index out of range");
        }
        const double s = x(static_cast<Eigen::Index>(feature_index));
        if (s < 0.0 || s != std::floor(s) || s >= static_cast<double>(groups)) {
          throw EvaluationError("aware group model: invalid group value");
        }
        Vector tau = Vector::Zero(static_cast<Eigen::Index>(groups));
        tau(static_cast<Eigen::Index>(s)) = 1.0;
        return tau;
      },
      std::move(marginals), "aware group indicator");
}

Vector SensitiveProbModel::operator()(const Vector& x) const {
  Vector tau = fn_(x);
  if (static_cast<std::size_t>(tau.size()) != num_groups_ || !tau.allFinite() ||
      tau.minCoeff() < 0.0 || std::abs(tau.sum() - 1.0) > 1e-9) {
    throw EvaluationError(name_ + ": output is not a probability vector");
  }
  return tau;
}

void SlackParams::validate(std::size_t num_classes) const {
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] >= 0.0) || !std::isfinite(eps[i])) {
      throw std::invalid_argument("eps[" + std::to_string(i) +
                                  "] must be finite and nonnegative");
    }
  }
  if (rejection_budget) check_unit_budget(*rejection_budget, "rejection_budget");
  if (error_budget) check_unit_budget(*error_budget, "error_budget");
  if (churn_budget) check_unit_budget(*churn_budget, "churn_budget");
  if (risk_budget) check_unit_budget(*risk_budget, "risk_budget");
  if (size_budget &&
      !(*size_budget > 0.0 && *size_budget <= static_cast<double>(num_classes))) {
    throw std::invalid_argument("size_budget must lie in (0, K]");
  }
}

Problem build_standard(const ClassProbModel& probs) {
  const std::size_t k = probs.num_classes();
  LossOracle loss(k, [probs](const Vector& x) { return standard_loss(probs(x)); },
                  "standard loss");
  return Problem(ActionSpace::classes(k), std::move(loss),
                 ConstraintOracle::none(k));
}

Problem build_controlled_rejection(const ClassProbModel& probs, double budget) {
  check_unit_budget(budget, "rejection budget");
  const std::size_t k = probs.num_classes();
  const auto width = static_cast<Eigen::Index>(k + 1);
  LossOracle loss(
      k + 1,
      [probs, width](const Vector& x) {
        Vector l = Vector::Zero(width);
        l.head(width - 1) = standard_loss(probs(x));
        return l;
      },
      "rejection loss");
  ConstraintOracle cost(
      1, k + 1,
      [budget, width](const Vector&) {
        Matrix c = Matrix::Constant(1, width, -budget);
        c(0, width - 1) += 1.0;
        return c;
      },
      {"rejection_rate"}, "rejection constraint");
  return Problem(ActionSpace::classes_with_reject(k), std::move(loss),
                 std::move(cost));
}

Problem build_controlled_error(const ClassProbModel& probs, double budget) {
  check_unit_budget(budget, "error budget");
  const std::size_t k = probs.num_classes();
  const auto width = static_cast<Eigen::Index>(k + 1);
  LossOracle loss(
      k + 1,
      [width](const Vector&) {
        Vector l = Vector::Zero(width);
        l(width - 1) = 1.0;
        return l;
      },
      "rejection-rate loss");
  ConstraintOracle cost(
      1, k + 1,
      [probs, budget, width](const Vector& x) {
        Matrix c = Matrix::Constant(1, width, -budget);
        c.block(0, 0, 1, width - 1) += standard_loss(probs(x)).transpose();
        return c;
      },
      {"error_rate"}, "error constraint");
  return Problem(ActionSpace::classes_with_reject(k), std::move(loss),
                 std::move(cost));
}

Problem build_demographic_parity(const ClassProbModel& probs,
                                 const SensitiveProbModel& groups,
                                 const std::vector<double>& eps) {
  const std::size_t k = probs.num_classes();
  const std::size_t ns = groups.num_groups();
  if (eps.size() != ns) {
    throw std::invalid_argument("demographic parity: need one eps per group");
  }
  for (double e : eps) {
    if (!(e >= 0.0)) throw std::invalid_argument("demographic parity: eps < 0");
  }
  const std::size_t half = ns * k;
  std::vector<std::string> names;
  for (char sign : {'+', '-'}) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t y = 0; y < k; ++y) {
        names.push_back(pair_name("dp", sign,
                                  "s=" + std::to_string(s) +
                                      ",y=" + std::to_string(y)));
      }
    }
  }
  ConstraintOracle cost(
      2 * half, k,
      [groups, eps, ns, k, half](const Vector& x) {
        const Vector tau = groups(x);
        Matrix c = Matrix::Zero(static_cast<Eigen::Index>(2 * half),
                                static_cast<Eigen::Index>(k));
        for (std::size_t s = 0; s < ns; ++s) {
          const auto si = static_cast<Eigen::Index>(s);
          const double ratio = tau(si) / groups.marginals()(si) - 1.0;
          for (std::size_t y = 0; y < k; ++y) {
            const auto row = static_cast<Eigen::Index>(s * k + y);
            const auto yi = static_cast<Eigen::Index>(y);
            c.row(row).setConstant(-eps[s]);
            c.row(row + static_cast<Eigen::Index>(half)).setConstant(-eps[s]);
            c(row, yi) += ratio;
            c(row + static_cast<Eigen::Index>(half), yi) -= ratio;
          }
        }
        return c;
      },
      std::move(names), "demographic parity constraints");
  const Problem base = build_standard(probs);
  return Problem(base.actions, base.loss, std::move(cost));
}

Problem build_equalized_odds(const ClassProbModel& probs,
                             const JointProbModel& joint,
                             const std::vector<double>& eps) {
  const std::size_t k = probs.num_classes();
  const auto ns = static_cast<std::size_t>(joint.joint_marginals.rows());
  if (static_cast<std::size_t>(joint.joint_marginals.cols()) != k ||
      static_cast<std::size_t>(joint.label_marginals.size()) != k || ns == 0) {
    throw std::invalid_argument("equalized odds: marginal shapes do not match K");
  }
  if (!joint.fn) throw std::invalid_argument("equalized odds: missing joint model");
  if (eps.size() != ns * k) {
    throw std::invalid_argument("equalized odds: need one eps per (s, y')");
  }
  for (double e : eps) {
    if (!(e >= 0.0)) throw std::invalid_argument("equalized odds: eps < 0");
  }
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t y = 0; y < k; ++y) {
      if (!(joint.joint_marginals(static_cast<Eigen::Index>(s),
                                  static_cast<Eigen::Index>(y)) > 0.0)) {
        throw std::invalid_argument("equalized odds: zero marginal P(S=" +
                                    std::to_string(s) + ",Y=" +
                                    std::to_string(y) + ")");
      }
    }
  }
  for (std::size_t y = 0; y < k; ++y) {
    if (!(joint.label_marginals(static_cast<Eigen::Index>(y)) > 0.0)) {
      throw std::invalid_argument("equalized odds: zero marginal P(Y=" +
                                  std::to_string(y) + ")");
    }
  }
  const std::size_t half = k * ns * k;
  std::vector<std::string> names;
  for (char sign : {'+', '-'}) {
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t yp = 0; yp < k; ++yp) {
          names.push_back(pair_name("eo", sign,
                                    "y=" + std::to_string(y) +
                                        ",s=" + std::to_string(s) +
                                        ",y'=" + std::to_string(yp)));
        }
      }
    }
  }
  ConstraintOracle cost(
      2 * half, k,
      [probs, joint, eps, ns, k, half](const Vector& x) {
        const Vector p = probs(x);
        const Matrix q = joint.fn(x);
        if (static_cast<std::size_t>(q.rows()) != ns ||
            static_cast<std::size_t>(q.cols()) != k || !q.allFinite()) {
          throw EvaluationError("joint probability model: wrong shape");
        }
        if ((q.colwise().sum().transpose() - p).cwiseAbs().maxCoeff() > 1e-6) {
          throw EvaluationError(
              "joint probability model: inconsistent with class probabilities");
        }
        Matrix c = Matrix::Zero(static_cast<Eigen::Index>(2 * half),
                                static_cast<Eigen::Index>(k));
        for (std::size_t y = 0; y < k; ++y) {
          for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t yp = 0; yp < k; ++yp) {
              const auto si = static_cast<Eigen::Index>(s);
              const auto ypi = static_cast<Eigen::Index>(yp);
              const double gap = q(si, ypi) / joint.joint_marginals(si, ypi) -
                                 p(ypi) / joint.label_marginals(ypi);
              const double e = eps[s * k + yp];
              const auto row = static_cast<Eigen::Index>((y * ns + s) * k + yp);
              const auto low = row + static_cast<Eigen::Index>(half);
              c.row(row).setConstant(-e);
              c.row(low).setConstant(-e);
              c(row, static_cast<Eigen::Index>(y)) += gap;
              c(low, static_cast<Eigen::Index>(y)) -= gap;
            }
          }
        }
        return c;
      },
      std::move(names), "equalized odds constraints");
  const Problem base = build_standard(probs);
  return Problem(base.actions, base.loss, std::move(cost));
}

Problem build_churn(const ClassProbModel& probs,
                    std::function<std::size_t(const Vector&)> base_classifier,
                    double budget) {
  check_unit_budget(budget, "churn budget");
  if (!base_classifier) throw std::invalid_argument("churn: missing base classifier");
  const std::size_t k = probs.num_classes();
  ConstraintOracle cost(
      1, k,
      [base_classifier, budget, k](const Vector& x) {
        const std::size_t g = base_classifier(x);
        if (g >= k) throw EvaluationError("churn: base classifier label out of range");
        Matrix c = Matrix::Constant(1, static_cast<Eigen::Index>(k), 1.0 - budget);
        c(0, static_cast<Eigen::Index>(g)) = -budget;
        return c;
      },
      {"churn_rate"}, "churn constraint");
  const Problem base = build_standard(probs);
  return Problem(base.actions, base.loss, std::move(cost));
}

Problem combine(const std::vector<Problem>& problems) {
  if (problems.empty()) throw std::invalid_argument("combine: no problems");
  const ActionSpace& actions = problems.front().actions;
  std::size_t total = 0;
  std::vector<std::string> names;
  for (const auto& p : problems) {
    if (!(p.actions == actions)) {
      throw std::invalid_argument("combine: action spaces differ");
    }
    total += p.num_constraints();
    names.insert(names.end(), p.constraints.row_names().begin(),
                 p.constraints.row_names().end());
  }
  std::vector<ConstraintOracle> parts;
  for (const auto& p : problems) parts.push_back(p.constraints);
  const std::size_t k = actions.size();
  ConstraintOracle stacked(
      total, k,
      [parts, total, k](const Vector& x) {
        Matrix c(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(k));
        Eigen::Index row = 0;
        for (const auto& part : parts) {
          const auto m = static_cast<Eigen::Index>(part.num_constraints());
          if (m == 0) continue;
          c.middleRows(row, m) = part(x);
          row += m;
        }
        return c;
      },
      std::move(names), "combined constraints");
  return Problem(actions, problems.front().loss, std::move(stacked));
}

Vector SetValuedProblem::augment(const Vector& x, std::size_t label) const {
  Vector z(x.size() + 1);
  z.head(x.size()) = x;
  z(x.size()) = static_cast<double>(label);
  return z;
}

std::vector<Vector> SetValuedProblem::augment(const std::vector<Vector>& xs) const {
  std::vector<Vector> out;
  out.reserve(xs.size() * num_classes);
  for (const auto& x : xs) {
    for (std::size_t y = 0; y < num_classes; ++y) out.push_back(augment(x, y));
  }
  return out;
}

Support SetValuedProblem::augment(const Support& support) const {
  std::vector<double> weights;
  weights.reserve(support.size() * num_classes);
  for (std::size_t i = 0; i < support.size(); ++i) {
    for (std::size_t y = 0; y < num_classes; ++y) {
      weights.push_back(support.weight(i) / static_cast<double>(num_classes));
    }
  }
  return Support(augment(support.points()), std::move(weights));
}

SetValuedProblem build_set_valued(const ClassProbModel& probs,
                                  SetValuedMode mode, double budget,
                                  std::optional<SetValuedChurn> churn) {
  const std::size_t k = probs.num_classes();
  const double kd = static_cast<double>(k);
  if (mode == SetValuedMode::kSizeBudget) {
    if (!(budget > 0.0 && budget <= kd)) {
      throw std::invalid_argument("size budget must lie in (0, K]");
    }
  } else {
    check_unit_budget(budget, "risk budget");
  }
  if (churn) {
    check_unit_budget(churn->budget, "churn budget");
    if (!churn->base_classifier) {
      throw std::invalid_argument("set-valued churn: missing base classifier");
    }
  }

  // Augmented point z = (x, y); split it back.
  auto split = [k](const Vector& z) {
    if (z.size() < 1) throw EvaluationError("set-valued: empty augmented point");
    const double yd = z(z.size() - 1);
    if (yd < 0.0 || yd != std::floor(yd) || yd >= static_cast<double>(k)) {
      throw EvaluationError("set-valued: invalid label coordinate");
    }
    return std::make_pair(Vector(z.head(z.size() - 1)),
                          static_cast<Eigen::Index>(yd));
  };

  // Action 0 = "out", action 1 = "in".
  LossOracle loss(
      2,
      [probs, mode, split](const Vector& z) {
        auto [x, y] = split(z);
        Vector l(2);
        if (mode == SetValuedMode::kSizeBudget) {
          l << probs(x)(y), 0.0;
        } else {
          l << 0.0, 1.0;
        }
        return l;
      },
      mode == SetValuedMode::kSizeBudget ? "miscoverage loss" : "size loss");

  const std::size_t m = churn ? 2 : 1;
  std::vector<std::string> names{mode == SetValuedMode::kSizeBudget
                                     ? "set_size"
                                     : "miscoverage"};
  if (churn) names.emplace_back("set_churn");
  ConstraintOracle cost(
      m, 2,
      [probs, mode, budget, kd, churn, split, m](const Vector& z) {
        auto [x, y] = split(z);
        Matrix c(static_cast<Eigen::Index>(m), 2);
        if (mode == SetValuedMode::kSizeBudget) {
          c(0, 0) = -budget / kd;
          c(0, 1) = 1.0 - budget / kd;
        } else {
          c(0, 0) = probs(x)(y) - budget / kd;
          c(0, 1) = -budget / kd;
        }
        if (churn) {
          const bool base = churn->base_classifier(x) ==
                            static_cast<std::size_t>(y);
          c(1, 0) = (base ? 1.0 : 0.0) - churn->budget / kd;
          c(1, 1) = -churn->budget / kd;
        }
        return c;
      },
      std::move(names), "set-valued constraints");

  return SetValuedProblem{
      k, mode, budget,
      Problem(ActionSpace::inclusion(), std::move(loss), std::move(cost))};
}

Vector inclusion_probabilities(const SetValuedProblem& problem,
                               const RandomizedClassifier& clf,
                               const Vector& x) {
  Vector pi(static_cast<Eigen::Index>(problem.num_classes));
  for (std::size_t y = 0; y < problem.num_classes; ++y) {
    pi(static_cast<Eigen::Index>(y)) = clf.predict_proba(problem.augment(x, y))(1);
  }
  return pi;
}

double set_risk(const InclusionFn& pi, const ClassProbModel& probs,
                const Support& support) {
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Vector& x = support.point(i);
    const Vector inc = pi(x);
    total += support.weight(i) *
             probs(x).dot(Vector::Ones(inc.size()) - inc);
  }
  return total;
}

double set_size(const InclusionFn& pi, const Support& support) {
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    total += support.weight(i) * pi(support.point(i)).sum();
  }
  return total;
}

}  // namespace copt
