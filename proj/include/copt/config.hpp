#ifndef COPT_CONFIG_HPP
#define COPT_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "copt/dataset.hpp"
#include "copt/estimators.hpp"
#include "copt/optimizers.hpp"
#include "copt/synthetic.hpp"

namespace copt {

/// Validation failure tied to one config field, e.g. "family.budget".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Family {
  kStandard,
  kRejection,
  kError,
  kDemographicParity,
  kEqualizedOdds,
  kChurn,
  kSetSize,
  kSetRisk,
};

Family parse_family(const std::string& name);
std::string to_string(Family family);
bool is_set_valued(Family family);

struct FamilyConfig {
  Family family = Family::kRejection;
  double budget = 0.1;      // rejection, error, churn, set size / risk
  std::vector<double> eps;  // demographic parity (|S|), equalized odds (|S| K)
  /// Group-aware parity: tau(x) is one-hot of this feature column.
  std::optional<std::size_t> aware_feature;
};

struct CsvSource {
  std::string path;
  CsvSchema schema;
};

struct EstimatorConfig {
  std::size_t degree = 0;
  KernelShape kernel = KernelShape::kEpanechnikov;
  std::optional<double> bandwidth;  // rule of thumb when unset
  /// Synthetic data only: use the generator's true probabilities.
  bool use_true_probabilities = false;
};

struct OptimizerConfig {
  std::size_t T = 1000;
  BetaMode beta_mode = BetaMode::kTheory;
  std::optional<double> beta;
  std::optional<double> sigma_sq;
  std::optional<double> mu;
  std::string method = "sgd3";  // or "projected_sgd"
  std::size_t passes = 1;       // CSV pool passes
  std::size_t trace_every = 0;
};

struct SweepConfig {
  std::vector<double> budgets;
  std::vector<std::uint64_t> seeds;
};

/// Seed scheme: the top-level seed s drives the optimizer stream (s + 2)
/// and sampled evaluation (s + 3); data generation and splitting use
/// data_seed, which defaults to s + 1 and is pinned across a sweep.
struct RunConfig {
  int version = 1;
  FamilyConfig family;
  std::optional<SyntheticSpec> synthetic;
  std::optional<CsvSource> csv;
  EstimatorConfig estimator;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> data_seed;
  std::string output_dir = "out";
  std::optional<SweepConfig> sweep;

  std::uint64_t resolved_data_seed() const { return data_seed ? *data_seed : seed + 1; }
  std::uint64_t stream_seed() const { return seed + 2; }
  std::uint64_t eval_seed() const { return seed + 3; }
};

inline constexpr int kConfigVersion = 1;

/// Field-level validation; throws ConfigError naming the first bad field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace copt

#endif  // COPT_CONFIG_HPP
