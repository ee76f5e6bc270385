#ifndef COPT_SYNTHETIC_HPP
#define COPT_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "copt/constraints.hpp"
#include "copt/evaluation.hpp"
#include "copt/oracle.hpp"

namespace copt {

/// Finite-support generator. Support points are drawn from a mixture of
/// unit Gaussians centred at separation * e_{c mod dim} (one component per
/// class), shifted by group_shift * e_0 per group index, and carry uniform
/// weights. On the support
///   p(.|x)   = softmax(separation * (mu_y . x))
///   tau(.|x) = softmax(group_strength * x_0 * (s - (S - 1) / 2))
/// with S independent of Y given X.
struct SyntheticSpec {
  std::size_t dim = 2;
  std::size_t num_classes = 2;
  std::size_t num_groups = 0;  // 0: no group attribute
  std::size_t support_size = 200;
  std::size_t num_samples = 0;
  double separation = 1.0;
  double group_shift = 1.0;
  double group_strength = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Ground truth of a synthetic draw plus optional labeled samples drawn
/// i.i.d. from it.
struct SyntheticData {
  Support support;
  std::vector<Vector> class_probs;  // p(.|x_i)
  std::vector<Vector> group_probs;  // tau(.|x_i); empty without groups
  Vector label_marginals;
  Vector group_marginals;
  Matrix joint_marginals;  // |S| x K
  LabeledData samples;

  std::size_t num_classes() const;
  std::size_t num_groups() const;

  ClassProbModel class_model() const;
  /// Requires groups.
  SensitiveProbModel group_model() const;
  JointProbModel joint_model() const;
  /// Tabulates a problem built from the true models on the support.
  FiniteInstance instance(const Problem& problem) const;
};

SyntheticData synth_generate(const SyntheticSpec& spec);

}  // namespace copt

#endif  // COPT_SYNTHETIC_HPP
