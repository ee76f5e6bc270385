#include <cmath>

#include <doctest.h>

#include "copt/certificate.hpp"
#include "copt/constraints.hpp"
#include "copt/optimizers.hpp"
#include "copt/oracle.hpp"
#include "copt/synthetic.hpp"
#include "generators.hpp"

using namespace copt;
using copt::testing::Gen;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// f(lambda) = 0.5 ||lambda - target||^2, fed as an exact "stochastic" gradient.
StochasticObjective quadratic(Vector target) {
  StochasticObjective obj;
  obj.dim = static_cast<std::size_t>(target.size());
  obj.gradient = [target](const Vector& lambda, const Vector&) { return Vector(lambda - target); };
  obj.value = [target](const Vector& lambda, const Vector&) {
    return 0.5 * (lambda - target).squaredNorm();
  };
  return obj;
}

SupportStream point_stream(std::uint64_t seed = 0) {
  return SupportStream(Support({Vector::Zero(1)}, {1.0}), seed);
}

}  // namespace

TEST_CASE("ac_sa keeps lambda0 when gradients vanish") {
  StochasticObjective zero;
  zero.dim = 2;
  zero.gradient = [](const Vector&, const Vector&) { return Vector::Zero(2).eval(); };
  auto s = point_stream();
  const DualVector out = ac_sa(zero, DualVector(vec({0.3, 1.2})), 0.5, 2.0, 200, s);
  CHECK((out.values() - vec({0.3, 1.2})).norm() < 1e-12);
  CHECK(s.draws() == 200);
}

TEST_CASE("ac_sa converges on a quadratic") {
  const Vector target = vec({0.7, 0.0, 2.5});
  double previous = 1e300;
  for (std::size_t T : {10, 100, 1000}) {
    auto s = point_stream();
    const DualVector out = ac_sa(quadratic(target), DualVector::zeros(3), 1.0, 1.0, T, s);
    const double err = (out.values() - target).norm();
    CHECK(err <= previous);
    previous = err;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("ac_sa projects onto the orthant") {
  // Unconstrained minimizer has a negative coordinate.
  const Vector target = vec({-1.0, 0.5});
  auto s = point_stream();
  std::size_t negatives = 0;
  const DualVector out = ac_sa(quadratic(target), DualVector::zeros(2), 1.0, 1.0, 500, s,
                               [&](std::size_t, const Vector& ag, const Vector&) {
                                 negatives += (ag.array() < 0).count();
                               });
  CHECK(negatives == 0);
  CHECK((out.values() - vec({0.0, 0.5})).norm() < 1e-3);
  CHECK_THROWS_AS(ac_sa(quadratic(target), DualVector::zeros(2), 0.0, 1.0, 5, s),
                  std::invalid_argument);
  CHECK_THROWS_AS(ac_sa(quadratic(target), DualVector::zeros(3), 1.0, 1.0, 5, s),
                  std::invalid_argument);
}

TEST_CASE("ac_sa is deterministic under a fixed seed") {
  Gen g(51);
  const FiniteInstance inst = copt::testing::random_instance(g, 8, 3, 2);
  const StochasticObjective obj = dual_stochastic_objective(inst.to_problem(), Temperature(4));
  auto a = SupportStream(inst.support, 99);
  auto b = SupportStream(inst.support, 99);
  const DualVector la = ac_sa(obj, DualVector::zeros(2), 0.1, 5.0, 300, a);
  const DualVector lb = ac_sa(obj, DualVector::zeros(2), 0.1, 5.0, 300, b);
  CHECK(la.values() == lb.values());
}

TEST_CASE("sgd3 threshold and stages") {
  CHECK(sgd3_stages(16.0, 1.0) == 4);
  CHECK(sgd3_threshold(16.0, 1.0) == 64.0);
  auto s = point_stream();
  CHECK_THROWS_AS(sgd3(quadratic(vec({1})), DualVector::zeros(1), 1.0, 16.0, 64, s),
                  std::invalid_argument);
  CHECK_NOTHROW(sgd3(quadratic(vec({1})), DualVector::zeros(1), 1.0, 16.0, 65, s));
  CHECK_THROWS_AS(sgd3(quadratic(vec({1})), DualVector::zeros(1), 2.0, 1.0, 100, s),
                  std::invalid_argument);
}

TEST_CASE("sgd3 with L = mu runs one pass with the whole budget") {
  auto s = point_stream();
  const OptimizerResult r = sgd3(quadratic(vec({0.4})), DualVector::zeros(1), 1.0, 1.0, 50, s);
  CHECK(s.draws() == 50);
  CHECK(r.alpha_cert.value() == 0.25);
}

TEST_CASE("sgd3 budget split and certificate step") {
  auto s = point_stream();
  // The anchor at lambda0 biases the output by about mu ||lambda0 - lambda*||.
  const OptimizerResult r = sgd3(quadratic(vec({0.4, 1.0})), DualVector::zeros(2), 1e-4, 1.0,
                                 10000, s, TraceOptions{1000});
  CHECK(s.draws() == 10000);
  const std::size_t J = sgd3_stages(1.0, 1e-4);
  CHECK(J == 13);
  CHECK(r.alpha_cert.value() == doctest::Approx(1.0 / (std::pow(2.0, J + 2) * 1e-4)));
  const Vector G = gradient_mapping(r.lambda_hat.values(), r.lambda_hat.values() - vec({0.4, 1.0}),
                                    r.alpha_cert);
  CHECK(G.norm() < 1e-3);
  REQUIRE(!r.trace.empty());
  CHECK(r.trace.back().iteration == 10000);
  CHECK(r.trace.back().stage == J);
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    CHECK(r.trace[i].iteration > r.trace[i - 1].iteration);
}

TEST_CASE("schedule arithmetic") {
  const OptimizerParams p = default_schedule(1024, 1.0);
  CHECK(p.beta == 12.8);
  CHECK(p.mu == 0.15625);
  CHECK(p.smoothness == 25.6);
  CHECK(sgd3_stages(p.smoothness, p.mu) == 7);
  for (std::size_t T : {200, 1000, 5000, 100000}) {
    const OptimizerParams q = default_schedule(T, 0.7);
    CHECK(q.smoothness / q.mu == doctest::Approx(q.beta * q.beta).epsilon(1e-12));
    CHECK(sgd3_stages(q.smoothness, q.mu) ==
          static_cast<std::size_t>(std::floor(std::log2(q.beta * q.beta))));
  }
  CHECK(schedule_beta(10000, BetaMode::kExperiment) == doctest::Approx(0.5 * 100 * std::log(100.0)));
}

TEST_CASE("schedule reports the smallest admissible T") {
  try {
    default_schedule(20, 1.0);
    FAIL("expected a schedule error");
  } catch (const ScheduleError& e) {
    const std::size_t t = e.minimal_T();
    REQUIRE(t > 20);
    CHECK_NOTHROW(default_schedule(t, 1.0));
    CHECK_THROWS_AS(default_schedule(t - 1, 1.0), ScheduleError);
  }
  CHECK_THROWS_AS(default_schedule(1, 1.0), ScheduleError);
  CHECK_THROWS_AS(default_schedule(1000, 0.0), std::invalid_argument);
}

TEST_CASE("sigma estimation") {
  const ClassProbModel probs(2, [](const Vector&) { return vec({0.5, 0.5}); });
  const Problem rej = build_controlled_rejection(probs, 0.3);
  // Columns (-0.3), (-0.3), (0.7): largest norm 0.7.
  CHECK(estimate_sigma_sq(rej.constraints, {Vector::Zero(1)}) == doctest::Approx(1.1 * 0.49));
  const ConstraintOracle zero(2, 3, [](const Vector&) { return Matrix::Zero(2, 3).eval(); });
  CHECK(estimate_sigma_sq(zero, {Vector::Zero(1)}) == 0.0);
  const ConstraintOracle indicator(1, 3, [](const Vector&) {
    Matrix m(1, 3);
    m << 0, 0, 1;
    return m;
  });
  CHECK(estimate_sigma_sq(indicator, {Vector::Zero(1), Vector::Ones(1)}) == doctest::Approx(1.1));
  Gen g(52);
  std::vector<Vector> batch = copt::testing::line_points(6);
  std::vector<Matrix> mats;
  for (int i = 0; i < 6; ++i) mats.push_back(g.matrix(2, 3, -1, 1));
  const ConstraintOracle table = ConstraintOracle::table(batch, mats);
  double brute = 0.0;
  for (const Matrix& m : mats) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) best = std::max(best, m.col(c).squaredNorm());
    brute += best / 6.0;
  }
  CHECK(estimate_sigma_sq(table, batch) == doctest::Approx(1.1 * brute).epsilon(1e-14));
  CHECK_THROWS_AS(estimate_sigma_sq(table, {}), std::invalid_argument);
}

TEST_CASE("copt reaches the rejection LP on one point") {
  const ClassProbModel probs(2, [](const Vector&) { return vec({0.5, 0.5}); });
  const Problem rej = build_controlled_rejection(probs, 0.3);
  const Support one({Vector::Zero(1)}, {1.0});
  CoptOptions opt;
  opt.T = 10000;
  SupportStream s(one, 1);
  const CoptResult r = copt::copt(rej, s, one.points(), opt);
  const Vector pi = r.classifier.predict_proba(Vector::Zero(1));
  CHECK(std::abs(pi(2) - 0.3) < 0.02);
  CHECK(std::abs(0.5 * (pi(0) + pi(1)) - 0.35) < 0.02);

  SupportStream s2(one, 1);
  const CoptResult again = copt::copt(rej, s2, one.points(), opt);
  CHECK(again.optimizer.lambda_hat.values() == r.optimizer.lambda_hat.values());
}

TEST_CASE("copt leaves inactive constraints at zero") {
  SyntheticSpec spec;
  spec.num_groups = 2;
  spec.support_size = 40;
  spec.seed = 5;
  const SyntheticData d = synth_generate(spec);
  const Problem dp = build_demographic_parity(d.class_model(), d.group_model(), {5.0, 5.0});
  CoptOptions opt;
  opt.T = 5000;
  SupportStream s(d.support, 2);
  const CoptResult r = copt::copt(dp, s, d.support.points(), opt);
  CHECK(r.optimizer.lambda_hat.values().norm() <= 0.05);
  const RandomizedClassifier gibbs(dp, DualVector::zeros(dp.num_constraints()), Temperature(r.params.beta));
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    const Vector& x = d.support.point(i);
    CHECK((r.classifier.predict_proba(x) - gibbs.predict_proba(x)).lpNorm<Eigen::Infinity>() < 0.05);
  }
}

TEST_CASE("projected sgd plugs into copt and the certificate") {
  Gen g(53);
  const FiniteInstance inst = copt::testing::random_instance(g, 10, 3, 2);
  const Problem p = inst.to_problem();
  CoptOptions opt;
  opt.T = 3000;
  SupportStream s(inst.support, 3);
  const CoptResult r = copt::copt(p, s, inst.support.points(), opt, ProjectedSgdOptimizer());
  CHECK((r.optimizer.lambda_hat.values().array() >= 0).all());
  const Certificate cert = certify(r.classifier, inst.support, r.optimizer.alpha_cert);
  CHECK(measured_violation(r.classifier, p.constraints, inst.support) <= cert.violation_bound + 1e-9);
}

TEST_CASE("copt rejects unconstrained problems") {
  const ClassProbModel probs(2, [](const Vector&) { return vec({0.5, 0.5}); });
  auto s = point_stream();
  CHECK_THROWS_AS(copt::copt(build_standard(probs), s, {Vector::Zero(1)}, CoptOptions{}),
                  std::domain_error);
}

TEST_CASE("experiment schedule points past the requested T") {
  // Admissible at T = 6 (a single stage) but not at T = 10^4.
  CHECK_NOTHROW(default_schedule(6, 1.0, BetaMode::kExperiment));
  try {
    default_schedule(10000, 1.0, BetaMode::kExperiment);
    FAIL("expected a schedule error");
  } catch (const ScheduleError& e) {
    CHECK(e.minimal_T() > 10000);
    CHECK_NOTHROW(default_schedule(e.minimal_T(), 1.0, BetaMode::kExperiment));
    CHECK_THROWS_AS(default_schedule(e.minimal_T() - 1, 1.0, BetaMode::kExperiment), ScheduleError);
  }
}
