#ifndef COPT_PROBLEM_HPP
#define COPT_PROBLEM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "copt/core_math.hpp"

namespace copt {

/// Raised when an oracle produces output of the wrong shape or a
/// non-finite entry. The message names the oracle.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered, finite prediction alphabet. Identifiers are unique and at most
/// one of them is the reject symbol.
class ActionSpace {
 public:
  static constexpr const char* kRejectId = "r";

  explicit ActionSpace(std::vector<std::string> ids,
                       std::optional<std::size_t> reject_index = std::nullopt);

  /// Labels "0".."K-1".
  static ActionSpace classes(std::size_t k);
  /// Labels "0".."K-1" followed by the reject symbol.
  static ActionSpace classes_with_reject(std::size_t k);
  /// The two outcomes {"out", "in"} of one label coordinate of a set-valued
  /// prediction.
  static ActionSpace inclusion();

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> reject_index() const { return reject_; }
  std::optional<std::size_t> index_of(const std::string& id) const;

  bool operator==(const ActionSpace& other) const = default;

 private:
  std::vector<std::string> ids_;
  std::optional<std::size_t> reject_;
};

/// Exact lookup from a feature vector to its row in a finite table.
class PointIndex {
 public:
  explicit PointIndex(const std::vector<Vector>& points);
  std::optional<std::size_t> find(const Vector& x) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::map<std::vector<double>, std::size_t> rows_;
};

/// x -> L(x), one loss per action.
class LossOracle {
 public:
  using Fn = std::function<Vector(const Vector&)>;

  LossOracle(std::size_t num_actions, Fn fn, std::string name = "loss oracle");

  /// Table-backed oracle over a finite support. Querying a point outside
  /// the support raises EvaluationError.
  static LossOracle table(const std::vector<Vector>& points,
                          std::vector<Vector> rows,
                          std::string name = "loss table");

  Vector operator()(const Vector& x) const;
  std::size_t num_actions() const { return num_actions_; }
  const std::string& name() const { return name_; }

 private:
  std::size_t num_actions_;
  Fn fn_;
  std::string name_;
};

/// x -> C(x), an M x |A| matrix whose row j holds c_j(x, .).
class ConstraintOracle {
 public:
  using Fn = std::function<Matrix(const Vector&)>;

  ConstraintOracle(std::size_t num_constraints, std::size_t num_actions, Fn fn,
                   std::vector<std::string> row_names = {},
                   std::string name = "constraint oracle");

  /// M = 0 oracle.
  static ConstraintOracle none(std::size_t num_actions);
  static ConstraintOracle table(const std::vector<Vector>& points,
                                std::vector<Matrix> mats,
                                std::vector<std::string> row_names = {},
                                std::string name = "constraint table");

  Matrix operator()(const Vector& x) const;
  std::size_t num_constraints() const { return num_constraints_; }
  std::size_t num_actions() const { return num_actions_; }
  const std::vector<std::string>& row_names() const { return row_names_; }
  const std::string& name() const { return name_; }

 private:
  std::size_t num_constraints_;
  std::size_t num_actions_;
  Fn fn_;
  std::vector<std::string> row_names_;
  std::string name_;
};

/// Action space plus loss and constraint oracles; every constraint reads
/// E[sum_a c_j(X, a) pi(a|X)] <= 0.
struct Problem {
  ActionSpace actions;
  LossOracle loss;
  ConstraintOracle constraints;

  Problem(ActionSpace a, LossOracle l, ConstraintOracle c);
  std::size_t num_actions() const { return actions.size(); }
  std::size_t num_constraints() const { return constraints.num_constraints(); }
};

/// Nonnegative dual variable.
class DualVector {
 public:
  explicit DualVector(Vector values);
  static DualVector zeros(std::size_t m) { return DualVector(Vector::Zero(m)); }
  const Vector& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

 private:
  Vector values_;
};

/// Finite set of feature vectors with probability weights.
class Support {
 public:
  Support(std::vector<Vector> points, std::vector<double> weights);
  static Support uniform(std::vector<Vector> points);

  std::size_t size() const { return points_.size(); }
  const Vector& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<Vector>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<Vector> points_;
  std::vector<double> weights_;
};

/// -L(x) - C(x)^T lambda.
Vector score_vector(const LossOracle& loss, const ConstraintOracle& constraints,
                    const Vector& lambda, const Vector& x);
Vector score_vector(const Problem& problem, const Vector& lambda,
                    const Vector& x);

/// Gibbs classifier pi_lambda(a|x) proportional to exp(beta * score_a(x)).
class RandomizedClassifier {
 public:
  RandomizedClassifier(Problem problem, DualVector lambda, Temperature beta);

  Vector predict_proba(const Vector& x) const;
  /// Inverse-CDF draw over the declared action order.
  std::size_t sample_action(const Vector& x, std::mt19937_64& rng) const;

  const Problem& problem() const { return problem_; }
  const ActionSpace& actions() const { return problem_.actions; }
  const DualVector& lambda() const { return lambda_; }
  Temperature beta() const { return beta_; }

 private:
  Problem problem_;
  DualVector lambda_;
  Temperature beta_;
};

/// Empirical mean of lse(score) over a batch.
double dual_objective(const Problem& problem, const Vector& lambda,
                      const std::vector<Vector>& batch, Temperature beta);
/// Weighted mean of lse(score) over a finite support.
double dual_objective(const Problem& problem, const Vector& lambda,
                      const Support& support, Temperature beta);

/// g(lambda; x) = -C(x) softmax(beta * score(x)). Requires M >= 1.
Vector stochastic_gradient(const Problem& problem, const Vector& lambda,
                           const Vector& x, Temperature beta);

/// Exact gradient of the dual objective over a finite support.
Vector exact_gradient(const Problem& problem, const Vector& lambda,
                      const Support& support, Temperature beta);

/// E[sum_a c_j(X,a) pi(a|X)] for each j, with the supplied (true)
/// constraint oracle.
Vector constraint_values(const RandomizedClassifier& clf,
                         const ConstraintOracle& true_constraints,
                         const Support& support);

/// E[sum_a l(X,a) pi(a|X)] with the supplied (true) loss oracle.
double risk_value(const RandomizedClassifier& clf, const LossOracle& true_loss,
                  const Support& support);

/// Source of feature vectors for the stochastic optimizers. Single consumer.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  /// Next draw; throws std::out_of_range when the stream is exhausted.
  virtual Vector next() = 0;
  std::size_t draws() const { return draws_; }

 protected:
  std::size_t draws_ = 0;
};

/// Walks a finite pool in a seeded random order, reshuffling between
/// passes. Exhausted after passes * pool.size() draws.
class PoolStream : public SampleStream {
 public:
  PoolStream(std::vector<Vector> pool, std::uint64_t seed,
             std::size_t passes = 1);
  Vector next() override;
  std::size_t capacity() const { return pool_.size() * passes_; }

 private:
  void reshuffle();

  std::vector<Vector> pool_;
  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  std::size_t passes_;
  std::size_t pass_ = 0;
  std::size_t pos_ = 0;
};

/// Independent draws from a weighted finite support. Never exhausted.
class SupportStream : public SampleStream {
 public:
  SupportStream(Support support, std::uint64_t seed);
  Vector next() override;

 private:
  Support support_;
  std::discrete_distribution<std::size_t> pick_;
  std::mt19937_64 rng_;
};

}  // namespace copt

#endif  // COPT_PROBLEM_HPP
