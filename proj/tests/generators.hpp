// Hand-rolled random instance generators shared by the tests.
#ifndef COPT_TESTS_GENERATORS_HPP
#define COPT_TESTS_GENERATORS_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "copt/oracle.hpp"
#include "copt/problem.hpp"

namespace copt::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  Vector vector(std::size_t n, double lo, double hi) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(lo, hi);
    return v;
  }
  Matrix matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(lo, hi);
    return m;
  }
  Vector simplex(std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = -std::log(uniform(1e-12, 1.0));
    return v / v.sum();
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Distinct one-dimensional points 0, 1, ..., n-1.
inline std::vector<Vector> line_points(std::size_t n) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(Vector::Constant(1, static_cast<double>(i)));
  return pts;
}

/// Random finite instance with loss in [0, 1] and constraints in [-1, 1],
/// shifted so that a random strictly positive witness policy has margin at
/// least `margin` on every constraint (Slater).
inline FiniteInstance random_instance(Gen& g, std::size_t n, std::size_t k,
                                      std::size_t m, double margin = 0.1) {
  std::vector<Vector> pts = line_points(n);
  std::vector<double> w(n);
  Vector wv = g.simplex(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = wv(static_cast<Eigen::Index>(i));
  std::vector<Vector> L;
  std::vector<Matrix> C;
  std::vector<Vector> witness;
  for (std::size_t i = 0; i < n; ++i) {
    L.push_back(g.vector(k, 0.0, 1.0));
    C.push_back(g.matrix(m, k, -1.0, 1.0));
    witness.push_back(g.simplex(k));
  }
  Vector value = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) value += w[i] * C[i] * witness[i];
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < value.size(); ++j) {
      const double shift = value(j) + margin;
      if (shift > 0.0) C[i].row(j).array() -= shift;
    }
  }
  std::vector<std::string> ids;
  for (std::size_t a = 0; a < k; ++a) ids.push_back(std::to_string(a));
  // Renormalize exactly so the instance's weight check passes.
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return FiniteInstance(ActionSpace(ids), Support(pts, w), std::move(L), std::move(C));
}

}  // namespace copt::testing

#endif  // COPT_TESTS_GENERATORS_HPP
