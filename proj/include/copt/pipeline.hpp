#ifndef COPT_PIPELINE_HPP
#define COPT_PIPELINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "copt/certificate.hpp"
#include "copt/config.hpp"
#include "copt/constraints.hpp"
#include "copt/evaluation.hpp"
#include "copt/optimizers.hpp"
#include "copt/synthetic.hpp"

namespace copt {

/// Probability models the constraint builders consume.
struct ProbabilityModels {
  ClassProbModel probs;
  std::optional<SensitiveProbModel> groups;
  std::optional<JointProbModel> joint;
};

/// Everything a run needs that depends only on the data seed: the data,
/// fitted (or true) models, and the evaluation support.
struct PreparedData {
  std::optional<SyntheticData> synthetic;
  std::optional<DataSplit> split;  // CSV source
  std::size_t num_classes = 0;
  ProbabilityModels estimated;
  std::optional<ProbabilityModels> truth;  // synthetic source
  /// Certificate support: the synthetic support, or the unlabeled pool with
  /// uniform weights.
  Support eval_support;
};

PreparedData prepare_data(const RunConfig& config);

struct FamilyProblem {
  Problem problem;  // the coordinate problem for set-valued families
  std::optional<SetValuedProblem> set_valued;
};

/// Builder failures surface as ConfigError on the family section.
FamilyProblem build_family(const FamilyConfig& family,
                           const ProbabilityModels& models,
                           std::function<std::size_t(const Vector&)> base_classifier);

/// argmax_y p(y|x), lowest index on ties.
std::function<std::size_t(const Vector&)> plug_in_classifier(const ClassProbModel& probs);

struct RunArtifacts {
  Family family;
  double budget;
  std::uint64_t seed;
  OptimizerParams params;
  DualVector lambda;
  std::vector<TraceRow> trace;
  Certificate certificate;
  EvalReport evaluation;
  std::optional<EvalReport> sample_evaluation;  // synthetic labeled draws
  std::optional<double> lp_value;
  std::optional<double> measured_violation;
  std::optional<double> measured_risk;
  std::vector<std::string> action_ids;
  std::vector<Vector> points;         // evaluation support
  std::vector<Vector> probabilities;  // pi(.|x), or inclusion probabilities

  /// Soundness of the certificate against the truth, when it is known.
  std::optional<bool> violation_sound() const;
  std::optional<bool> risk_sound() const;
};

/// Largest n |A| for which the run also solves the exact LP.
inline constexpr std::size_t kLpSizeLimit = 10'000;

RunArtifacts run_prepared(const RunConfig& config, const PreparedData& data);
RunArtifacts run_pipeline(const RunConfig& config);

/// Writes lambda.json, certificate.json, evaluation.json, params.json,
/// probabilities.csv and, when traced, trace.csv into `dir`.
void write_run_artifacts(const RunArtifacts& artifacts, const std::string& dir);

/// Column order of the sweep table.
std::vector<std::string> sweep_columns();
std::string format_sweep_row(const RunArtifacts& artifacts);

/// Runs every (budget, seed) cell, budgets outermost, writing one CSV row
/// per finished cell and flushing after each. With `only_seed`, other seeds
/// are skipped. The data is prepared once from the config's data seed.
/// Returns the number of rows written; a failing cell propagates its
/// exception after earlier rows are flushed.
std::size_t run_sweep(const RunConfig& config, std::ostream& out, bool write_header,
                      std::optional<std::uint64_t> only_seed = std::nullopt);

}  // namespace copt

#endif  // COPT_PIPELINE_HPP
