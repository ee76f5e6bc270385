#ifndef COPT_OPTIMIZERS_HPP
#define COPT_OPTIMIZERS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "copt/problem.hpp"

namespace copt {

/// A convex function given through unbiased stochastic gradients
/// grad f(lambda; x) at samples x. `value` is optional and only feeds the
/// trace.
struct StochasticObjective {
  std::size_t dim = 0;
  std::function<Vector(const Vector& lambda, const Vector& x)> gradient;
  std::function<double(const Vector& lambda, const Vector& x)> value;
};

/// f(lambda; x) = lse(-L(x) - C(x)^T lambda) and its gradient.
StochasticObjective dual_stochastic_objective(const Problem& problem,
                                              Temperature beta);

struct OptimizerParams {
  double sigma_sq = 0.0;    // variance bound
  double smoothness = 0.0;  // L = 2 beta sigma^2
  double mu = 0.0;          // initial strong-convexity shift
  std::size_t T = 1;
  double beta = 1.0;
  std::uint64_t seed = 0;

  /// 0 < mu <= smoothness, T >= 1, sigma_sq >= 0.
  void validate() const;
};

struct TraceRow {
  std::size_t iteration;
  std::size_t stage;
  double objective;  // f(lambda_ag; x) at the current sample, NaN if unknown
  double lambda_norm;
  double elapsed_seconds;
};

struct OptimizerResult {
  DualVector lambda_hat;
  StepSize alpha_cert;
  std::vector<TraceRow> trace;
};

/// Record one trace row every `every` iterations; 0 disables tracing.
struct TraceOptions {
  std::size_t every = 0;
};

/// Called after each iteration with (t, lambda_ag, sample).
using IterationHook =
    std::function<void(std::size_t, const Vector&, const Vector&)>;

/// Accelerated stochastic approximation for mu-strongly convex, L-smooth
/// objectives over the nonnegative orthant. Consumes exactly T draws.
DualVector ac_sa(const StochasticObjective& objective, const DualVector& lambda0,
                 double mu, double smoothness, std::size_t T,
                 SampleStream& stream, const IterationHook& hook = {});

/// Smallest T rejected by SGD3: 4 sqrt(L/mu) floor(log2(L/mu)).
double sgd3_threshold(double smoothness, double mu);
/// floor(log2(L/mu)), the number of SGD3 stages.
std::size_t sgd3_stages(double smoothness, double mu);

/// Multi-stage proximal scheme around AC-SA. Stage j optimizes
/// F(lambda) + sum_{i<j} (mu_i / 2) ||lambda - center_i||^2 with budget
/// T / J (remainder to the last stage) and mu doubling per stage. With
/// J = 0 a single AC-SA pass on the mu-regularized objective uses the whole
/// budget. alpha_cert = 1 / (2^{J+2} mu).
OptimizerResult sgd3(const StochasticObjective& objective,
                     const DualVector& lambda0, double mu, double smoothness,
                     std::size_t T, SampleStream& stream,
                     const TraceOptions& trace = {});

/// Raised when a schedule is inadmissible; carries the smallest admissible
/// T at or above the requested one (0 if none was found).
class ScheduleError : public std::invalid_argument {
 public:
  ScheduleError(const std::string& what, std::size_t minimal_T)
      : std::invalid_argument(what), minimal_T_(minimal_T) {}
  std::size_t minimal_T() const { return minimal_T_; }

 private:
  std::size_t minimal_T_;
};

enum class BetaMode {
  kTheory,      // beta = T / (8 log2 T)
  kExperiment,  // beta = 0.5 sqrt(T) log(sqrt(T))
};

double schedule_beta(std::size_t T, BetaMode mode);

/// beta from the mode (or the override), mu = 2 sigma^2 / beta,
/// L = 2 beta sigma^2. Throws ScheduleError when mu > L or T is below the
/// SGD3 threshold.
OptimizerParams default_schedule(std::size_t T, double sigma_sq,
                                 BetaMode mode = BetaMode::kTheory,
                                 std::optional<double> beta_override = {});

/// 1.1 * mean ||C(x)||_{1->2}^2 over the batch.
double estimate_sigma_sq(const ConstraintOracle& constraints,
                         const std::vector<Vector>& batch);

/// Anything that turns T stochastic gradients into a dual point with a
/// gradient-mapping guarantee at step alpha_cert.
class BlackBoxOptimizer {
 public:
  virtual ~BlackBoxOptimizer() = default;
  virtual OptimizerResult minimize(const StochasticObjective& objective,
                                   const DualVector& lambda0,
                                   const OptimizerParams& params,
                                   SampleStream& stream) const = 0;
  virtual std::string name() const = 0;
};

class Sgd3Optimizer : public BlackBoxOptimizer {
 public:
  explicit Sgd3Optimizer(TraceOptions trace = {}) : trace_(trace) {}
  OptimizerResult minimize(const StochasticObjective& objective,
                           const DualVector& lambda0,
                           const OptimizerParams& params,
                           SampleStream& stream) const override;
  std::string name() const override { return "sgd3"; }

 private:
  TraceOptions trace_;
};

/// Plain projected SGD with constant step min(1/L, 1/(sigma sqrt(T)));
/// returns the last iterate. Reference implementation of the contract.
class ProjectedSgdOptimizer : public BlackBoxOptimizer {
 public:
  OptimizerResult minimize(const StochasticObjective& objective,
                           const DualVector& lambda0,
                           const OptimizerParams& params,
                           SampleStream& stream) const override;
  std::string name() const override { return "projected_sgd"; }
};

struct CoptOptions {
  std::size_t T = 1;
  BetaMode beta_mode = BetaMode::kTheory;
  std::optional<double> beta;
  std::optional<double> sigma_sq;  // skips estimation when set
  std::optional<double> mu;
  std::optional<Vector> lambda0;   // zeros by default
  std::uint64_t seed = 0;          // recorded in the parameters
};

struct CoptResult {
  RandomizedClassifier classifier;
  OptimizerResult optimizer;
  OptimizerParams params;
};

/// Estimate sigma^2 on the calibration batch, set the schedule, run the
/// black-box optimizer on the plug-in dual and return the Gibbs classifier
/// at its output.
CoptResult copt(const Problem& problem, SampleStream& stream,
                const std::vector<Vector>& calibration_batch,
                const CoptOptions& options,
                const BlackBoxOptimizer& optimizer = Sgd3Optimizer());

}  // namespace copt

#endif  // COPT_OPTIMIZERS_HPP
