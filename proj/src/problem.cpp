#include "copt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

namespace copt {

namespace {

std::vector<double> key_of(const Vector& x) {
  return std::vector<double>(x.data(), x.data() + x.size());
}

}  // namespace

ActionSpace::ActionSpace(std::vector<std::string> ids,
                         std::optional<std::size_t> reject_index)
    : ids_(std::move(ids)), reject_(reject_index) {
  if (ids_.empty()) throw std::invalid_argument("action space is empty");
  std::set<std::string> seen(ids_.begin(), ids_.end());
  if (seen.size() != ids_.size()) {
    throw std::invalid_argument("action identifiers must be unique");
  }
  if (reject_ && *reject_ >= ids_.size()) {
    throw std::invalid_argument("reject index out of range");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == kRejectId && reject_ != i) {
      throw std::invalid_argument("reject symbol used for a non-reject action");
    }
  }
}

ActionSpace ActionSpace::classes(std::size_t k) {
  std::vector<std::string> ids;
  for (std::size_t y = 0; y < k; ++y) ids.push_back(std::to_string(y));
  return ActionSpace(std::move(ids));
}

ActionSpace ActionSpace::classes_with_reject(std::size_t k) {
  std::vector<std::string> ids;
  for (std::size_t y = 0; y < k; ++y) ids.push_back(std::to_string(y));
  ids.emplace_back(kRejectId);
  return ActionSpace(std::move(ids), k);
}

ActionSpace ActionSpace::inclusion() { return ActionSpace({"out", "in"}); }

std::optional<std::size_t> ActionSpace::index_of(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

PointIndex::PointIndex(const std::vector<Vector>& points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    rows_.emplace(key_of(points[i]), i);  // first occurrence wins
  }
}

std::optional<std::size_t> PointIndex::find(const Vector& x) const {
  auto it = rows_.find(key_of(x));
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

LossOracle::LossOracle(std::size_t num_actions, Fn fn, std::string name)
    : num_actions_(num_actions), fn_(std::move(fn)), name_(std::move(name)) {
  if (num_actions_ == 0) throw std::invalid_argument("loss oracle needs actions");
  if (!fn_) throw std::invalid_argument("loss oracle without a function");
}

LossOracle LossOracle::table(const std::vector<Vector>& points,
                             std::vector<Vector> rows, std::string name) {
  if (points.size() != rows.size() || rows.empty()) {
    throw std::invalid_argument("loss table: points and rows differ in length");
  }
  const auto k = static_cast<std::size_t>(rows.front().size());
  auto index = std::make_shared<PointIndex>(points);
  auto data = std::make_shared<std::vector<Vector>>(std::move(rows));
  std::string label = name;
  return LossOracle(
      k,
      [index, data, label](const Vector& x) -> Vector {
        auto row = index->find(x);
        if (!row) throw EvaluationError(label + ": point not in table");
        return (*data)[*row];
      },
      std::move(name));
}

Vector LossOracle::operator()(const Vector& x) const {
  Vector out = fn_(x);
  if (static_cast<std::size_t>(out.size()) != num_actions_) {
    throw EvaluationError(name_ + ": returned " + std::to_string(out.size()) +
                          " entries, expected " + std::to_string(num_actions_));
  }
  if (!out.allFinite()) throw EvaluationError(name_ + ": non-finite output");
  return out;
}

ConstraintOracle::ConstraintOracle(std::size_t num_constraints,
                                   std::size_t num_actions, Fn fn,
                                   std::vector<std::string> row_names,
                                   std::string name)
    : num_constraints_(num_constraints),
      num_actions_(num_actions),
      fn_(std::move(fn)),
      row_names_(std::move(row_names)),
      name_(std::move(name)) {
  if (num_actions_ == 0) {
    throw std::invalid_argument("constraint oracle needs actions");
  }
  if (!fn_) throw std::invalid_argument("constraint oracle without a function");
  if (row_names_.empty()) {
    for (std::size_t j = 0; j < num_constraints_; ++j) {
      row_names_.push_back("c" + std::to_string(j));
    }
  }
  if (row_names_.size() != num_constraints_) {
    throw std::invalid_argument("constraint row names do not match M");
  }
}

ConstraintOracle ConstraintOracle::none(std::size_t num_actions) {
  return ConstraintOracle(0, num_actions, [num_actions](const Vector&) {
    return Matrix(0, static_cast<Eigen::Index>(num_actions));
  });
}

ConstraintOracle ConstraintOracle::table(const std::vector<Vector>& points,
                                         std::vector<Matrix> mats,
                                         std::vector<std::string> row_names,
                                         std::string name) {
  if (points.size() != mats.size() || mats.empty()) {
    throw std::invalid_argument(
        "constraint table: points and matrices differ in length");
  }
  const auto m = static_cast<std::size_t>(mats.front().rows());
  const auto k = static_cast<std::size_t>(mats.front().cols());
  auto index = std::make_shared<PointIndex>(points);
  auto data = std::make_shared<std::vector<Matrix>>(std::move(mats));
  std::string label = name;
  return ConstraintOracle(
      m, k,
      [index, data, label](const Vector& x) -> Matrix {
        auto row = index->find(x);
        if (!row) throw EvaluationError(label + ": point not in table");
        return (*data)[*row];
      },
      std::move(row_names), std::move(name));
}

Matrix ConstraintOracle::operator()(const Vector& x) const {
  Matrix out = fn_(x);
  if (static_cast<std::size_t>(out.rows()) != num_constraints_ ||
      static_cast<std::size_t>(out.cols()) != num_actions_) {
    throw EvaluationError(name_ + ": returned a " + std::to_string(out.rows()) +
                          "x" + std::to_string(out.cols()) +
                          " matrix, expected " +
                          std::to_string(num_constraints_) + "x" +
                          std::to_string(num_actions_));
  }
  if (!out.allFinite()) throw EvaluationError(name_ + ": non-finite output");
  return out;
}

Problem::Problem(ActionSpace a, LossOracle l, ConstraintOracle c)
    : actions(std::move(a)), loss(std::move(l)), constraints(std::move(c)) {
  if (loss.num_actions() != actions.size() ||
      constraints.num_actions() != actions.size()) {
    throw std::invalid_argument(
        "problem: oracle widths do not match the action space");
  }
}

DualVector::DualVector(Vector values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw std::invalid_argument("dual vector not finite");
  if (values_.size() > 0 && values_.minCoeff() < 0.0) {
    throw std::invalid_argument("dual vector must be componentwise nonnegative");
  }
}

Support::Support(std::vector<Vector> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw std::invalid_argument("support is empty");
  if (points_.size() != weights_.size()) {
    throw std::invalid_argument("support: points and weights differ in length");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("support weights must be nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("support weights sum to " +
                                std::to_string(total) + ", expected 1");
  }
}

Support Support::uniform(std::vector<Vector> points) {
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("support is empty");
  return Support(std::move(points),
                 std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Vector score_vector(const LossOracle& loss, const ConstraintOracle& constraints,
                    const Vector& lambda, const Vector& x) {
  if (static_cast<std::size_t>(lambda.size()) != constraints.num_constraints()) {
    throw std::invalid_argument("score_vector: lambda has " +
                                std::to_string(lambda.size()) +
                                " entries, expected " +
                                std::to_string(constraints.num_constraints()));
  }
  if (loss.num_actions() != constraints.num_actions()) {
    throw std::invalid_argument("score_vector: oracle widths differ");
  }
  Vector s = -loss(x);
  if (constraints.num_constraints() > 0) {
    s.noalias() -= constraints(x).transpose() * lambda;
  }
  return s;
}

Vector score_vector(const Problem& problem, const Vector& lambda,
                    const Vector& x) {
  return score_vector(problem.loss, problem.constraints, lambda, x);
}

RandomizedClassifier::RandomizedClassifier(Problem problem, DualVector lambda,
                                           Temperature beta)
    : problem_(std::move(problem)), lambda_(std::move(lambda)), beta_(beta) {
  if (lambda_.size() != problem_.num_constraints()) {
    throw std::invalid_argument("classifier: lambda size does not match M");
  }
}

Vector RandomizedClassifier::predict_proba(const Vector& x) const {
  return softmax(score_vector(problem_, lambda_.values(), x), beta_);
}

std::size_t RandomizedClassifier::sample_action(const Vector& x,
                                                std::mt19937_64& rng) const {
  const Vector p = predict_proba(x);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    cumulative += p(a);
    if (u < cumulative) return static_cast<std::size_t>(a);
  }
  return static_cast<std::size_t>(p.size() - 1);
}

double dual_objective(const Problem& problem, const Vector& lambda,
                      const std::vector<Vector>& batch, Temperature beta) {
  if (batch.empty()) throw std::invalid_argument("dual_objective: empty batch");
  double total = 0.0;
  for (const auto& x : batch) total += lse(score_vector(problem, lambda, x), beta);
  return total / static_cast<double>(batch.size());
}

double dual_objective(const Problem& problem, const Vector& lambda,
                      const Support& support, Temperature beta) {
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    total += support.weight(i) *
             lse(score_vector(problem, lambda, support.point(i)), beta);
  }
  return total;
}

Vector stochastic_gradient(const Problem& problem, const Vector& lambda,
                           const Vector& x, Temperature beta) {
  if (problem.num_constraints() == 0) {
    throw std::domain_error("stochastic_gradient: no constraints to optimize");
  }
  const Matrix c = problem.constraints(x);
  Vector s = -problem.loss(x);
  s.noalias() -= c.transpose() * lambda;
  return -c * softmax(s, beta);
}

Vector exact_gradient(const Problem& problem, const Vector& lambda,
                      const Support& support, Temperature beta) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(problem.num_constraints()));
  if (problem.num_constraints() == 0) return g;
  for (std::size_t i = 0; i < support.size(); ++i) {
    g += support.weight(i) *
         stochastic_gradient(problem, lambda, support.point(i), beta);
  }
  return g;
}

Vector constraint_values(const RandomizedClassifier& clf,
                         const ConstraintOracle& true_constraints,
                         const Support& support) {
  if (true_constraints.num_constraints() != clf.problem().num_constraints() ||
      true_constraints.num_actions() != clf.actions().size()) {
    throw std::invalid_argument(
        "constraint_values: true constraints do not match the classifier");
  }
  Vector out =
      Vector::Zero(static_cast<Eigen::Index>(true_constraints.num_constraints()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Vector& x = support.point(i);
    out += support.weight(i) * (true_constraints(x) * clf.predict_proba(x));
  }
  return out;
}

double risk_value(const RandomizedClassifier& clf, const LossOracle& true_loss,
                  const Support& support) {
  if (true_loss.num_actions() != clf.actions().size()) {
    throw std::invalid_argument("risk_value: true loss does not match actions");
  }
  double out = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Vector& x = support.point(i);
    out += support.weight(i) * true_loss(x).dot(clf.predict_proba(x));
  }
  return out;
}

PoolStream::PoolStream(std::vector<Vector> pool, std::uint64_t seed,
                       std::size_t passes)
    : pool_(std::move(pool)), rng_(seed), passes_(passes) {
  if (pool_.empty()) throw std::invalid_argument("sample pool is empty");
  if (passes_ == 0) throw std::invalid_argument("passes must be at least 1");
  order_.resize(pool_.size());
  reshuffle();
}

void PoolStream::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), rng_);
  pos_ = 0;
}

Vector PoolStream::next() {
  if (pos_ == order_.size()) {
    if (pass_ + 1 >= passes_) {
      throw std::out_of_range("sample stream exhausted after " +
                              std::to_string(draws_) + " draws");
    }
    ++pass_;
    reshuffle();
  }
  ++draws_;
  return pool_[order_[pos_++]];
}

SupportStream::SupportStream(Support support, std::uint64_t seed)
    : support_(std::move(support)),
      pick_(support_.weights().begin(), support_.weights().end()),
      rng_(seed) {}

Vector SupportStream::next() {
  ++draws_;
  return support_.point(pick_(rng_));
}

}  // namespace copt
