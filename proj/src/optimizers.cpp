#include "copt/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace copt {

StochasticObjective dual_stochastic_objective(const Problem& problem,
                                              Temperature beta) {
  if (problem.num_constraints() == 0) {
    throw std::domain_error("dual objective has no constraints to optimize");
  }
  StochasticObjective obj;
  obj.dim = problem.num_constraints();
  obj.gradient = [problem, beta](const Vector& lambda, const Vector& x) {
    return stochastic_gradient(problem, lambda, x, beta);
  };
  obj.value = [problem, beta](const Vector& lambda, const Vector& x) {
    return lse(score_vector(problem, lambda, x), beta);
  };
  return obj;
}

void OptimizerParams::validate() const {
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(mu <= smoothness)) {
    throw std::invalid_argument("mu must not exceed the smoothness L");
  }
  if (T < 1) throw std::invalid_argument("T must be at least 1");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
}

DualVector ac_sa(const StochasticObjective& objective, const DualVector& lambda0,
                 double mu, double smoothness, std::size_t T,
                 SampleStream& stream, const IterationHook& hook) {
  if (!(mu > 0.0)) throw std::invalid_argument("ac_sa: mu must be positive");
  if (!(smoothness > 0.0)) {
    throw std::invalid_argument("ac_sa: smoothness must be positive");
  }
  if (T < 1) throw std::invalid_argument("ac_sa: T must be at least 1");
  if (lambda0.size() != objective.dim) {
    throw std::invalid_argument("ac_sa: lambda0 has the wrong dimension");
  }

  Vector lambda = lambda0.values();
  Vector ag = lambda0.values();
  Vector md(lambda.size());
  for (std::size_t t = 1; t <= T; ++t) {
    const Vector x = stream.next();
    const double td = static_cast<double>(t);
    const double a = 2.0 / (td + 1.0);
    const double gamma = 4.0 * smoothness / (td * (td + 1.0));
    const double denom = gamma + (1.0 - a * a) * mu;
    md = ((1.0 - a) * (mu + gamma) / denom) * ag +
         (a * ((1.0 - a) * mu + gamma) / denom) * lambda;
    const Vector g = objective.gradient(md, x);
    lambda = positive_part((((1.0 - a) * mu + gamma) / (mu + gamma)) * lambda +
                           (a * mu / (mu + gamma)) * md -
                           (a / (mu + gamma)) * g);
    ag = a * lambda + (1.0 - a) * ag;
    if (hook) hook(t, ag, x);
  }
  // ag is a convex combination of nonnegative points; clamp rounding dust.
  return DualVector(positive_part(ag));
}

double sgd3_threshold(double smoothness, double mu) {
  const double ratio = smoothness / mu;
  return 4.0 * std::sqrt(ratio) * std::floor(std::log2(ratio));
}

std::size_t sgd3_stages(double smoothness, double mu) {
  const double j = std::floor(std::log2(smoothness / mu));
  return j <= 0.0 ? 0 : static_cast<std::size_t>(j);
}

OptimizerResult sgd3(const StochasticObjective& objective,
                     const DualVector& lambda0, double mu, double smoothness,
                     std::size_t T, SampleStream& stream,
                     const TraceOptions& trace) {
  if (!(mu > 0.0)) throw std::invalid_argument("sgd3: mu must be positive");
  if (!(mu <= smoothness)) {
    throw std::invalid_argument("sgd3: mu must not exceed the smoothness L");
  }
  const double threshold = sgd3_threshold(smoothness, mu);
  if (static_cast<double>(T) <= threshold) {
    std::ostringstream msg;
    msg << "sgd3: T = " << T << " does not exceed 4 sqrt(L/mu) floor(log2(L/mu)) = "
        << threshold;
    throw std::invalid_argument(msg.str());
  }
  const std::size_t stages = sgd3_stages(smoothness, mu);
  const double stage_smoothness = 2.0 * (smoothness + mu);

  // Proximal centers and weights accumulated so far: F^{(j)} adds
  // (mu_i / 2) ||lambda - center_i||^2 for every finished stage.
  std::vector<Vector> centers{lambda0.values()};
  std::vector<double> weights{mu};

  const auto start = std::chrono::steady_clock::now();
  std::vector<TraceRow> rows;
  std::size_t global = 0;

  auto run_stage = [&](const DualVector& from, double stage_mu,
                       std::size_t budget, std::size_t stage) {
    StochasticObjective prox;
    prox.dim = objective.dim;
    const auto c = centers;
    const auto w = weights;
    prox.gradient = [&objective, c, w](const Vector& lambda, const Vector& x) {
      Vector g = objective.gradient(lambda, x);
      for (std::size_t i = 0; i < c.size(); ++i) g += w[i] * (lambda - c[i]);
      return g;
    };
    IterationHook hook;
    if (trace.every > 0) {
      hook = [&, c, w](std::size_t t, const Vector& ag, const Vector& x) {
        ++global;
        if (t % trace.every != 0 && t != budget) return;
        double value = std::numeric_limits<double>::quiet_NaN();
        if (objective.value) {
          value = objective.value(ag, x);
          for (std::size_t i = 0; i < c.size(); ++i) {
            value += 0.5 * w[i] * (ag - c[i]).squaredNorm();
          }
        }
        const double elapsed = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        rows.push_back({global, stage, value, ag.norm(), elapsed});
      };
    }
    return ac_sa(prox, from, stage_mu, stage_smoothness, budget, stream, hook);
  };

  if (stages == 0) {
    DualVector out = run_stage(lambda0, mu, T, 0);
    return {out, StepSize(1.0 / (4.0 * mu)), std::move(rows)};
  }

  DualVector current = lambda0;
  double stage_mu = mu;
  const std::size_t per_stage = T / stages;
  for (std::size_t j = 1; j <= stages; ++j) {
    const std::size_t budget =
        j == stages ? T - per_stage * (stages - 1) : per_stage;
    current = run_stage(current, stage_mu, budget, j);
    stage_mu *= 2.0;
    centers.push_back(current.values());
    weights.push_back(stage_mu);
  }
  const double alpha = 1.0 / (std::ldexp(1.0, static_cast<int>(stages) + 2) * mu);
  return {current, StepSize(alpha), std::move(rows)};
}

double schedule_beta(std::size_t T, BetaMode mode) {
  const double t = static_cast<double>(T);
  if (mode == BetaMode::kTheory) return t / (8.0 * std::log2(t));
  const double root = std::sqrt(t);
  return 0.5 * root * std::log(root);
}

namespace {

bool admissible(std::size_t T, double beta, double sigma_sq) {
  if (!(beta > 0.0) || !std::isfinite(beta)) return false;
  const double mu = 2.0 * sigma_sq / beta;
  const double smoothness = 2.0 * beta * sigma_sq;
  if (!(mu <= smoothness)) return false;
  return static_cast<double>(T) > sgd3_threshold(smoothness, mu);
}

// Admissibility is not monotone in T in experiment mode, so the search
// starts at the requested T.
std::size_t minimal_admissible_T(std::size_t from, double sigma_sq, BetaMode mode) {
  constexpr std::size_t kLimit = 10'000'000;
  for (std::size_t t = std::max<std::size_t>(from, 2); t <= kLimit; ++t) {
    if (admissible(t, schedule_beta(t, mode), sigma_sq)) return t;
  }
  return 0;
}

}  // namespace

OptimizerParams default_schedule(std::size_t T, double sigma_sq, BetaMode mode,
                                 std::optional<double> beta_override) {
  if (T < 2) throw ScheduleError("schedule: T must be at least 2", 2);
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
    throw std::invalid_argument("schedule: sigma_sq must be positive");
  }
  OptimizerParams p;
  p.T = T;
  p.sigma_sq = sigma_sq;
  p.beta = beta_override ? *beta_override : schedule_beta(T, mode);
  if (!(p.beta > 0.0) || !std::isfinite(p.beta)) {
    throw std::invalid_argument("schedule: beta must be positive");
  }
  p.mu = 2.0 * sigma_sq / p.beta;
  p.smoothness = 2.0 * p.beta * sigma_sq;
  if (!admissible(T, p.beta, sigma_sq)) {
    const std::size_t min_t =
        beta_override ? 0 : minimal_admissible_T(T, sigma_sq, mode);
    std::ostringstream msg;
    msg << "schedule inadmissible for T = " << T << " (beta = " << p.beta
        << ", mu = " << p.mu << ", L = " << p.smoothness << ")";
    if (min_t > 0) msg << "; smallest admissible T at or above it is " << min_t;
    throw ScheduleError(msg.str(), min_t);
  }
  return p;
}

double estimate_sigma_sq(const ConstraintOracle& constraints,
                         const std::vector<Vector>& batch) {
  if (batch.empty()) throw std::invalid_argument("estimate_sigma_sq: empty batch");
  double total = 0.0;
  for (const auto& x : batch) {
    const double n = norm_1_to_2(constraints(x));
    total += n * n;
  }
  return 1.1 * total / static_cast<double>(batch.size());
}

OptimizerResult Sgd3Optimizer::minimize(const StochasticObjective& objective,
                                        const DualVector& lambda0,
                                        const OptimizerParams& params,
                                        SampleStream& stream) const {
  params.validate();
  return sgd3(objective, lambda0, params.mu, params.smoothness, params.T, stream,
              trace_);
}

OptimizerResult ProjectedSgdOptimizer::minimize(
    const StochasticObjective& objective, const DualVector& lambda0,
    const OptimizerParams& params, SampleStream& stream) const {
  params.validate();
  const double sigma = std::sqrt(params.sigma_sq);
  double step = 1.0 / params.smoothness;
  if (sigma > 0.0) {
    step = std::min(step, 1.0 / (sigma * std::sqrt(static_cast<double>(params.T))));
  }
  Vector lambda = lambda0.values();
  for (std::size_t t = 0; t < params.T; ++t) {
    lambda = positive_part(lambda - step * objective.gradient(lambda, stream.next()));
  }
  return {DualVector(lambda), StepSize(step), {}};
}

CoptResult copt(const Problem& problem, SampleStream& stream,
                const std::vector<Vector>& calibration_batch,
                const CoptOptions& options,
                const BlackBoxOptimizer& optimizer) {
  if (problem.num_constraints() == 0) {
    throw std::domain_error("copt: the problem has no constraints");
  }
  const double sigma_sq = options.sigma_sq
                              ? *options.sigma_sq
                              : estimate_sigma_sq(problem.constraints,
                                                  calibration_batch);
  OptimizerParams params =
      default_schedule(options.T, sigma_sq, options.beta_mode, options.beta);
  if (options.mu) {
    params.mu = *options.mu;
    params.validate();
  }
  params.seed = options.seed;
  const Temperature beta(params.beta);
  const DualVector lambda0(options.lambda0
                               ? *options.lambda0
                               : Vector::Zero(static_cast<Eigen::Index>(
                                     problem.num_constraints())));
  OptimizerResult result = optimizer.minimize(
      dual_stochastic_objective(problem, beta), lambda0, params, stream);
  RandomizedClassifier clf(problem, result.lambda_hat, beta);
  return {std::move(clf), std::move(result), params};
}

}  // namespace copt
