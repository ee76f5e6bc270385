#include <cmath>

#include <doctest.h>

#include "copt/constraints.hpp"
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

const Vector kX = Vector::Zero(1);

ClassProbModel constant_probs(Vector p) {
  const auto k = static_cast<std::size_t>(p.size());
  return ClassProbModel(k, [p](const Vector&) { return p; });
}

/// Expectation of C under the policy returning `pi` everywhere.
Vector expected_cost(const Problem& p, const Support& s, const std::function<Vector(const Vector&)>& pi) {
  Vector total = Vector::Zero(static_cast<Eigen::Index>(p.num_constraints()));
  for (std::size_t i = 0; i < s.size(); ++i)
    total += s.weight(i) * p.constraints(s.point(i)) * pi(s.point(i));
  return total;
}

SyntheticData synthetic(std::uint64_t seed, std::size_t groups, std::size_t classes = 2) {
  SyntheticSpec spec;
  spec.num_classes = classes;
  spec.num_groups = groups;
  spec.support_size = 30;
  spec.seed = seed;
  return synth_generate(spec);
}

}  // namespace

TEST_CASE("standard loss") {
  const Problem p = build_standard(constant_probs(vec({0.7, 0.3})));
  CHECK((p.loss(kX) - vec({0.3, 0.7})).norm() < 1e-15);
  CHECK(p.num_constraints() == 0);
  const Problem u = build_standard(constant_probs(Vector::Constant(4, 0.25)));
  CHECK((u.loss(kX).array() == 0.75).all());
  CHECK_THROWS_AS(constant_probs(vec({1.0})), std::invalid_argument);
}

TEST_CASE("controlled rejection") {
  const Problem p = build_controlled_rejection(constant_probs(vec({0.6, 0.4})), 0.3);
  CHECK(p.actions.reject_index() == std::optional<std::size_t>(2));
  CHECK((p.loss(kX) - vec({0.4, 0.6, 0.0})).norm() < 1e-15);
  const Support one({kX}, {1.0});
  CHECK(std::abs(expected_cost(p, one, [](const Vector&) { return vec({1, 0, 0}); })(0) + 0.3) < 1e-15);
  CHECK(std::abs(expected_cost(p, one, [](const Vector&) { return vec({0, 0, 1}); })(0) - 0.7) < 1e-15);
  CHECK_THROWS_AS(build_controlled_rejection(constant_probs(vec({0.6, 0.4})), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_controlled_rejection(constant_probs(vec({0.6, 0.4})), 0.0), std::invalid_argument);
}

TEST_CASE("controlled error") {
  const Problem p = build_controlled_error(constant_probs(vec({0.6, 0.4})), 0.2);
  CHECK((p.loss(kX) - vec({0, 0, 1})).norm() < 1e-15);
  const Support one({kX}, {1.0});
  CHECK(std::abs(expected_cost(p, one, [](const Vector&) { return vec({0, 0, 1}); })(0) + 0.2) < 1e-15);
  CHECK_THROWS_AS(build_controlled_error(constant_probs(vec({0.6, 0.4})), -0.1), std::invalid_argument);
}

TEST_CASE("demographic parity rows") {
  // Aware mode: x = (group), one support point per group, P(S=s) = 1/2.
  const ClassProbModel probs = ClassProbModel::table(
      {vec({0}), vec({1})}, {vec({0.8, 0.2}), vec({0.3, 0.7})});
  const SensitiveProbModel groups = SensitiveProbModel::aware(0, vec({0.5, 0.5}));
  const Problem p = build_demographic_parity(probs, groups, {0.05, 0.1});
  REQUIRE(p.num_constraints() == 8);
  const Matrix c0 = p.constraints(vec({0}));
  // Row (+, s=0, y=0): (1/0.5 - 1) 1{a=0} - 0.05.
  CHECK((c0.row(0) - vec({0.95, -0.05}).transpose()).norm() < 1e-15);
  // Row (+, s=1, y=1) at a group-0 point: (0 - 1) 1{a=1} - 0.1.
  CHECK((c0.row(3) - vec({-0.1, -1.1}).transpose()).norm() < 1e-15);
  // Row (-, s=0, y=0) is the negated ratio term.
  CHECK((c0.row(4) - vec({-1.05, -0.05}).transpose()).norm() < 1e-15);
  // Paired rows: c+ + c- = -2 eps.
  for (Eigen::Index r = 0; r < 4; ++r) {
    const double e = r < 2 ? 0.05 : 0.1;
    CHECK(((c0.row(r) + c0.row(r + 4)).array() + 2 * e).abs().maxCoeff() < 1e-15);
  }
  CHECK_THROWS_AS(SensitiveProbModel::aware(0, vec({1.0, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(build_demographic_parity(probs, groups, {0.1}), std::invalid_argument);
}

TEST_CASE("demographic parity: uniform policy is feasible with slack eps") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticData d = synthetic(seed, 2);
    const Problem p = build_demographic_parity(d.class_model(), d.group_model(), {0.02, 0.03});
    const Vector cv = expected_cost(p, d.support, [](const Vector&) { return Vector::Constant(2, 0.5); });
    for (Eigen::Index r = 0; r < cv.size(); ++r) {
      const double e = (r % 4) < 2 ? 0.02 : 0.03;
      CHECK(std::abs(cv(r) + e) < 1e-12);
    }
  }
}

TEST_CASE("demographic parity with huge eps recovers the Bayes rule") {
  const SyntheticData d = synthetic(7, 2);
  const Problem p = build_demographic_parity(d.class_model(), d.group_model(), {10.0, 10.0});
  const OracleSolution sol = solve_lp_exact(d.instance(p));
  REQUIRE(sol.status == OracleStatus::kOptimal);
  double bayes = 0.0;
  for (std::size_t i = 0; i < d.support.size(); ++i)
    bayes += d.support.weight(i) * (1.0 - d.class_probs[i].maxCoeff());
  CHECK(std::abs(sol.lp_value - bayes) < 1e-9);
  CHECK(sol.lambda_star.norm() < 1e-12);
}

TEST_CASE("equalized odds rows") {
  const SyntheticData d = synthetic(3, 2);
  const std::vector<double> eps{0.01, 0.02, 0.03, 0.04};
  const Problem p = build_equalized_odds(d.class_model(), d.joint_model(), eps);
  REQUIRE(p.num_constraints() == 2 * 2 * 2 * 2);
  const Vector cv = expected_cost(p, d.support, [](const Vector&) { return Vector::Constant(2, 0.5); });
  // Uniform policy: every row's expectation is -eps_{(s, y')}; rows run (sign, y, s, y').
  for (Eigen::Index r = 0; r < cv.size(); ++r) {
    const auto within = static_cast<std::size_t>(r % 8);
    const std::size_t s = (within / 2) % 2, yp = within % 2;
    CHECK(std::abs(cv(r) + eps[s * 2 + yp]) < 1e-12);
  }
  const Matrix c = p.constraints(d.support.point(0));
  CHECK(((c.topRows(8) + c.bottomRows(8)).rowwise().sum().array() <= 0).all());
}

TEST_CASE("equalized odds vanishes when S is independent of X given Y") {
  // P(S, Y | X) = P(Y | X) q_s with fixed q, so the ratio terms cancel.
  const std::vector<Vector> pts = copt::testing::line_points(3);
  const std::vector<Vector> p_rows{vec({0.2, 0.8}), vec({0.5, 0.5}), vec({0.9, 0.1})};
  const ClassProbModel probs = ClassProbModel::table(pts, p_rows);
  const Vector q = vec({0.3, 0.7});
  JointProbModel joint;
  joint.fn = [probs, q](const Vector& x) { return Matrix(q * probs(x).transpose()); };
  Vector py = Vector::Zero(2);
  for (const Vector& r : p_rows) py += r / 3.0;
  joint.label_marginals = py;
  joint.joint_marginals = q * py.transpose();
  const Problem p = build_equalized_odds(probs, joint, {0, 0, 0, 0});
  for (const Vector& x : pts) CHECK(p.constraints(x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("churn") {
  const Problem p = build_churn(constant_probs(vec({0.3, 0.7})),
                                [](const Vector&) { return std::size_t{0}; }, 0.2);
  CHECK((p.constraints(kX) - Matrix(vec({-0.2, 0.8}).transpose())).norm() < 1e-15);
  const Support one({kX}, {1.0});
  CHECK(std::abs(expected_cost(p, one, [](const Vector&) { return vec({1, 0}); })(0) + 0.2) < 1e-15);
  CHECK_THROWS_AS(build_churn(constant_probs(vec({0.3, 0.7})), {}, 0.2), std::invalid_argument);

  // Budget above the disagreement of Bayes and g: LP equals Bayes.
  const SyntheticData d = synthetic(4, 0);
  const Problem loose = build_churn(d.class_model(), [](const Vector&) { return std::size_t{0}; }, 0.99);
  const OracleSolution sol = solve_lp_exact(d.instance(loose));
  double bayes = 0.0;
  for (std::size_t i = 0; i < d.support.size(); ++i)
    bayes += d.support.weight(i) * (1.0 - d.class_probs[i].maxCoeff());
  CHECK(std::abs(sol.lp_value - bayes) < 1e-9);
}

TEST_CASE("combine stacks rows in order") {
  const ClassProbModel probs = ClassProbModel::table({vec({0}), vec({1})}, {vec({0.8, 0.2}), vec({0.3, 0.7})});
  const Problem dp = build_demographic_parity(probs, SensitiveProbModel::aware(0, vec({0.5, 0.5})), {0.1, 0.1});
  const Problem churn = build_churn(probs, [](const Vector&) { return std::size_t{1}; }, 0.3);
  const Problem both = combine({dp, churn});
  CHECK(both.num_constraints() == dp.num_constraints() + 1);
  const Matrix c = both.constraints(vec({1}));
  CHECK(c.topRows(8) == dp.constraints(vec({1})));
  CHECK(c.row(8) == churn.constraints(vec({1})));
  const Problem alone = combine({dp});
  CHECK(alone.constraints(vec({0})) == dp.constraints(vec({0})));
  const Problem rej = build_controlled_rejection(probs, 0.1);
  CHECK_THROWS_AS(combine({dp, rej}), std::invalid_argument);

  // The combined violation vector contains each part's violation entries.
  const Support s({vec({0}), vec({1})}, {0.5, 0.5});
  const RandomizedClassifier clf(both, DualVector::zeros(9), Temperature(5));
  const Vector all = constraint_values(clf, both.constraints, s);
  const RandomizedClassifier part(dp, DualVector::zeros(8), Temperature(5));
  CHECK((all.head(8) - constraint_values(part, dp.constraints, s)).norm() < 1e-12);
}

TEST_CASE("set-valued endpoints and linearity") {
  const ClassProbModel probs = constant_probs(vec({0.5, 0.3, 0.2}));
  const Support one({kX}, {1.0});
  const InclusionFn all = [](const Vector&) { return Vector::Ones(3).eval(); };
  const InclusionFn none = [](const Vector&) { return Vector::Zero(3).eval(); };
  CHECK(set_risk(all, probs, one) == 0.0);
  CHECK(set_size(all, one) == 3.0);
  CHECK(std::abs(set_risk(none, probs, one) - 1.0) < 1e-15);
  CHECK(set_size(none, one) == 0.0);

  Gen g(41);
  for (int rep = 0; rep < 100; ++rep) {
    const Vector pi = g.vector(3, 0, 0.5);
    const InclusionFn f = [pi](const Vector&) { return pi; };
    const InclusionFn f2 = [pi](const Vector&) { return Vector(2 * pi); };
    CHECK(std::abs(set_size(f2, one) - 2 * set_size(f, one)) < 1e-12);
    // Risk is affine: R(2 pi) = 2 R(pi) - R(0).
    CHECK(std::abs(set_risk(f2, probs, one) - (2 * set_risk(f, probs, one) - 1.0)) < 1e-12);
  }
  CHECK_THROWS_AS(build_set_valued(probs, SetValuedMode::kSizeBudget, 3.5), std::invalid_argument);
  CHECK_THROWS_AS(build_set_valued(probs, SetValuedMode::kRiskBudget, 1.0), std::invalid_argument);
}

TEST_CASE("set-valued size budget keeps only the top class") {
  const ClassProbModel probs = constant_probs(vec({0.5, 0.3, 0.2}));
  const SetValuedProblem svp = build_set_valued(probs, SetValuedMode::kSizeBudget, 1.0);
  const Support aug = svp.augment(Support({kX}, {1.0}));
  REQUIRE(aug.size() == 3);
  const FiniteInstance inst = FiniteInstance::tabulate(svp.coordinate_problem, aug);
  const OracleSolution sol = solve_lp_exact(inst);
  REQUIRE(sol.status == OracleStatus::kOptimal);
  // Coordinate risk is the set risk divided by K.
  CHECK(std::abs(3 * sol.lp_value - 0.5) < 1e-12);
  CHECK(std::abs(sol.pi_star[0](1) - 1.0) < 1e-12);
  CHECK(std::abs(sol.pi_star[1](1)) < 1e-12);
  CHECK(std::abs(sol.pi_star[2](1)) < 1e-12);
}

TEST_CASE("set-valued encoding matches set metrics") {
  const SyntheticData d = synthetic(9, 0, 3);
  const SetValuedProblem svp = build_set_valued(d.class_model(), SetValuedMode::kSizeBudget, 1.5);
  const Support aug = svp.augment(d.support);
  const RandomizedClassifier clf(svp.coordinate_problem, DualVector(vec({0.4})), Temperature(3));
  const InclusionFn pi = [&](const Vector& x) { return inclusion_probabilities(svp, clf, x); };
  const double coord_risk = risk_value(clf, svp.coordinate_problem.loss, aug);
  const double coord_c = constraint_values(clf, svp.coordinate_problem.constraints, aug)(0);
  CHECK(std::abs(3 * coord_risk - set_risk(pi, d.class_model(), d.support)) < 1e-12);
  CHECK(std::abs(3 * coord_c - (set_size(pi, d.support) - 1.5)) < 1e-12);
}

TEST_CASE("slater witnesses are strictly feasible on synthetic instances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticData d = synthetic(seed, 2);
    const ClassProbModel probs = d.class_model();
    const Support& s = d.support;
    const Problem rej = build_controlled_rejection(probs, 0.1);
    CHECK(expected_cost(rej, s, [](const Vector&) { return vec({1, 0, 0}); })(0) < 0);
    const Problem err = build_controlled_error(probs, 0.1);
    CHECK(expected_cost(err, s, [](const Vector&) { return vec({0, 0, 1}); })(0) < 0);
    const auto g = [](const Vector& x) { return std::size_t{x(0) > 0 ? 1u : 0u}; };
    const Problem churn = build_churn(probs, g, 0.1);
    CHECK(expected_cost(churn, s, [&](const Vector& x) {
            Vector e = Vector::Zero(2);
            e(static_cast<Eigen::Index>(g(x))) = 1;
            return e;
          })(0) < 0);
    const Problem dp = build_demographic_parity(probs, d.group_model(), {0.01, 0.01});
    CHECK((expected_cost(dp, s, [](const Vector&) { return Vector::Constant(2, 0.5); }).array() < 0).all());
  }
}
