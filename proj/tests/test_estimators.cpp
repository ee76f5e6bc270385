#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "copt/constraints.hpp"
#include "copt/dataset.hpp"
#include "copt/estimators.hpp"
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

}  // namespace

TEST_CASE("kernel shapes") {
  const KernelSpec box(KernelShape::kBox, 2.0);
  CHECK(box.weight(vec({1.9}), vec({0})) == 1.0);
  CHECK(box.weight(vec({2.1}), vec({0})) == 0.0);
  const KernelSpec epan(KernelShape::kEpanechnikov, 2.0);
  CHECK(epan.weight(vec({1.0}), vec({0})) == doctest::Approx(0.75 * 0.75));
  CHECK(epan.weight(vec({3.0}), vec({0})) == 0.0);
  const KernelSpec gauss(KernelShape::kGaussian, 1.0);
  CHECK(gauss.weight(vec({1.0, 1.0}), vec({0, 0})) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(KernelSpec(KernelShape::kBox, 0.0), std::invalid_argument);
  CHECK(parse_kernel_shape("gaussian") == KernelShape::kGaussian);
  CHECK_THROWS_AS(parse_kernel_shape("triangle"), std::invalid_argument);
  CHECK(rule_of_thumb_bandwidth(1024, 0, 8) == doctest::Approx(std::pow(1024.0, -0.1)));
}

TEST_CASE("degree 0 is the kernel-weighted mean") {
  Gen g(61);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = g.index(3, 40);
    std::vector<Vector> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(g.vector(2, -1, 1));
      ys.push_back(g.uniform(0, 1) < 0.4 ? 1.0 : 0.0);
    }
    const KernelSpec k(KernelShape::kGaussian, g.uniform(0.2, 2));
    const LocalPolyModel m(0, k, xs, ys);
    const Vector q = g.vector(2, -1, 1);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
      num += k.weight(xs[i], q) * ys[i];
      den += k.weight(xs[i], q);
    }
    CHECK(std::abs(m.predict(q) - num / den) < 1e-12);
  }
}

TEST_CASE("constant labels predict one") {
  const std::vector<Vector> xs{vec({0}), vec({0.3}), vec({-0.2}), vec({0.5})};
  const LocalPolyModel m(1, KernelSpec(KernelShape::kEpanechnikov, 1.0), xs, {1, 1, 1, 1});
  CHECK(std::abs(m.predict(vec({0.1})) - 1.0) < 1e-12);
}

TEST_CASE("degree 1 recovers linear data") {
  Gen g(62);
  std::vector<Vector> xs;
  std::vector<double> ys;
  for (int i = 0; i < 60; ++i) {
    const Vector x = g.vector(2, -1, 1);
    xs.push_back(x);
    ys.push_back(0.3 + 0.1 * x(0) - 0.05 * x(1));
  }
  const LocalPolyModel m(1, KernelSpec(KernelShape::kEpanechnikov, 0.8), xs, ys);
  for (const Vector& q : {vec({0, 0}), vec({0.2, -0.3}), vec({-0.4, 0.1})})
    CHECK(std::abs(m.predict_unclipped(q) - (0.3 + 0.1 * q(0) - 0.05 * q(1))) < 1e-8);
  // Degree 2 reproduces a quadratic exactly as well.
  std::vector<double> quad;
  for (const Vector& x : xs) quad.push_back(0.2 + 0.1 * x(0) * x(1) + 0.3 * x(0) * x(0));
  const LocalPolyModel m2(2, KernelSpec(KernelShape::kGaussian, 1.0), xs, quad);
  CHECK(std::abs(m2.predict_unclipped(vec({0.1, 0.2})) - (0.2 + 0.002 + 0.003)) < 1e-8);
}

TEST_CASE("singular normal equations return zero") {
  // No neighbours within the box kernel.
  const LocalPolyModel far(0, KernelSpec(KernelShape::kBox, 0.1), {vec({0}), vec({1})}, {1, 1});
  CHECK(far.predict(vec({5})) == 0.0);
  // Degree 1 with a single kernel-positive point cannot fit a slope.
  const LocalPolyModel one(1, KernelSpec(KernelShape::kBox, 0.5), {vec({0}), vec({3})}, {1, 1});
  CHECK(one.predict(vec({0.1})) == 0.0);
}

TEST_CASE("outputs are clipped and large bandwidths give the global mean") {
  Gen g(63);
  std::vector<Vector> xs;
  std::vector<double> ys;
  double mean = 0;
  for (int i = 0; i < 200; ++i) {
    xs.push_back(g.vector(1, 0, 1));
    ys.push_back(xs.back()(0) > 0.5 ? 1.0 : 0.0);
    mean += ys.back() / 200;
  }
  const LocalPolyModel lin(1, KernelSpec(KernelShape::kBox, 0.3), xs, ys);
  for (int i = 0; i < 50; ++i) {
    const double p = lin.predict(g.vector(1, -0.2, 1.2));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  const LocalPolyModel wide(0, KernelSpec(KernelShape::kGaussian, 1e5), xs, ys);
  CHECK(std::abs(wide.predict(vec({0.3})) - mean) < 1e-6);
}

TEST_CASE("one vs all") {
  // Separated points, tiny bandwidth: near one-hot.
  const std::vector<Vector> xs{vec({0}), vec({1}), vec({2})};
  const ClassProbModel sep = one_vs_all({0, 1, 2}, xs, 3, 0, KernelSpec(KernelShape::kGaussian, 0.05));
  for (std::size_t y = 0; y < 3; ++y) CHECK(sep(xs[y])(static_cast<Eigen::Index>(y)) > 1 - 1e-6);
  // Far away: every fit returns zero, uniform fallback.
  const ClassProbModel boxed = one_vs_all({0, 1, 2}, xs, 3, 0, KernelSpec(KernelShape::kBox, 0.1));
  CHECK((boxed(vec({10})).array() - 1.0 / 3).abs().maxCoeff() < 1e-15);

  // Labels independent of x: frequencies recovered.
  std::mt19937_64 rng(64);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Vector> f;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 10000; ++i) {
    f.push_back(vec({u(rng)}));
    const double r = u(rng);
    labels.push_back(r < 0.2 ? 0 : (r < 0.5 ? 1 : 2));
  }
  const ClassProbModel flat = one_vs_all(labels, f, 3, 0, KernelSpec(KernelShape::kEpanechnikov, 0.3));
  const Vector p = flat(vec({0.5}));
  CHECK(std::abs(p(0) - 0.2) < 0.05);
  CHECK(std::abs(p(1) - 0.3) < 0.05);
  CHECK(std::abs(p(2) - 0.5) < 0.05);
  const Vector freq = empirical_marginals(labels, 3);
  CHECK(std::abs(freq.sum() - 1.0) < 1e-15);

  // K = 2: matches (eta, 1 - eta) from the class-1 fit.
  std::vector<std::size_t> bin(labels.begin(), labels.begin() + 300);
  for (auto& y : bin) y = y == 2 ? 1 : 0;
  std::vector<Vector> fb(f.begin(), f.begin() + 300);
  std::vector<double> r1;
  for (auto y : bin) r1.push_back(static_cast<double>(y));
  const KernelSpec k(KernelShape::kEpanechnikov, 0.2);
  const ClassProbModel two = one_vs_all(bin, fb, 2, 0, k);
  const LocalPolyModel eta(0, k, fb, r1);
  CHECK(std::abs(two(vec({0.4}))(1) - eta.predict(vec({0.4}))) < 1e-12);

  CHECK_THROWS_AS(one_vs_all({}, {}, 2, 0, k), std::invalid_argument);
}

TEST_CASE("local polynomial error shrinks with more data") {
  // eta(x) = 0.5 + 0.4 sin(3x) on [0, 1].
  const auto eta = [](double x) { return 0.5 + 0.4 * std::sin(3 * x); };
  double small = 0, large = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    auto l1 = [&](std::size_t n) {
      std::vector<Vector> xs;
      std::vector<double> ys;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = u(rng);
        xs.push_back(vec({x}));
        ys.push_back(u(rng) < eta(x) ? 1.0 : 0.0);
      }
      const LocalPolyModel m(1, KernelSpec(KernelShape::kEpanechnikov, rule_of_thumb_bandwidth(n, 1, 1)), xs, ys);
      double err = 0;
      for (int j = 0; j < 100; ++j) {
        const double x = (j + 0.5) / 100;
        err += std::abs(m.predict(vec({x})) - eta(x)) / 100;
      }
      return err;
    };
    small += l1(500);
    large += l1(2000);
  }
  CHECK(large / small < 1.0);
}

TEST_CASE("estimation errors") {
  const std::vector<Vector> pts = copt::testing::line_points(3);
  const Support s(pts, {0.2, 0.3, 0.5});
  const ClassProbModel truth = ClassProbModel::table(pts, {vec({0.6, 0.4}), vec({0.1, 0.9}), vec({0.5, 0.5})});
  const Problem p = build_controlled_rejection(truth, 0.2);
  const EstimationErrors same = estimation_errors(p.loss, p.constraints, p.loss, p.constraints, s);
  CHECK(same.delta_loss == 0.0);
  CHECK(same.delta_constraint == 0.0);

  const LossOracle bumped(3, [&](const Vector& x) {
    Vector l = p.loss(x);
    l(1) += 0.1;
    return l;
  });
  CHECK(std::abs(estimation_errors(bumped, p.constraints, p.loss, p.constraints, s).delta_loss - 0.1) < 1e-15);

  Gen g(65);
  std::vector<Vector> dl;
  std::vector<Matrix> dc;
  for (int i = 0; i < 3; ++i) {
    dl.push_back(g.vector(3, -0.2, 0.2));
    dc.push_back(g.matrix(1, 3, -0.2, 0.2));
  }
  const LossOracle lhat(3, [&](const Vector& x) { return Vector(p.loss(x) + dl[static_cast<std::size_t>(x(0))]); });
  const ConstraintOracle chat(1, 3, [&](const Vector& x) {
    return Matrix(p.constraints(x) + dc[static_cast<std::size_t>(x(0))]);
  });
  double bl = 0, bc = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    bl += s.weight(i) * dl[i].cwiseAbs().maxCoeff();
    bc += s.weight(i) * dc[i].colwise().squaredNorm().maxCoeff();
  }
  const EstimationErrors e = estimation_errors(lhat, chat, p.loss, p.constraints, s);
  CHECK(std::abs(e.delta_loss - bl) < 1e-15);
  CHECK(std::abs(e.delta_constraint - std::sqrt(bc)) < 1e-15);
}

TEST_CASE("probability table csv") {
  const std::string path = std::string(COPT_TEST_TMP) + "/probs.csv";
  std::filesystem::create_directories(COPT_TEST_TMP);
  std::ofstream(path) << "a,b\n0.25,0.75\n1,0\n";
  const std::vector<Vector> pts = copt::testing::line_points(2);
  const ClassProbModel m = load_probability_table(path, pts);
  CHECK(m.num_classes() == 2);
  CHECK(m(pts[0])(1) == 0.75);
  std::ofstream(path) << "a,b\n0.25,0.7\n1,0\n";
  CHECK_THROWS(load_probability_table(path, pts)(pts[0]));
}
