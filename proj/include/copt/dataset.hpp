#ifndef COPT_DATASET_HPP
#define COPT_DATASET_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "copt/constraints.hpp"
#include "copt/evaluation.hpp"

namespace copt {

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { kUnreadable, kEmpty, kMissingColumn, kNonNumeric, kBadLabel };
  DatasetError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Column roles. Empty `features` selects every column other than the
/// label and group columns, in file order.
struct CsvSchema {
  std::vector<std::string> features;
  std::string label = "label";
  std::optional<std::string> group;
};

/// Labels and groups must be nonnegative integers; num_groups and the
/// class count are one past the largest value seen.
struct Dataset {
  LabeledData data;
  std::size_t num_classes = 0;
  std::vector<std::string> feature_names;
};

/// Comma-separated file with a header row.
Dataset ingest_csv(const std::string& path, const CsvSchema& schema);

struct DataSplit {
  LabeledData train;
  LabeledData unlabeled;
  LabeledData test;
};

/// Seeded shuffle, then the first round(train_fraction n) rows go to train
/// and the next round(unlabeled_fraction n) to the unlabeled pool; the rest
/// is test.
DataSplit split_dataset(const LabeledData& data, std::uint64_t seed,
                        double train_fraction = 0.4,
                        double unlabeled_fraction = 0.4);

/// Probability table: header of class identifiers, then one row per
/// support point, in the order of `points`.
ClassProbModel load_probability_table(const std::string& path,
                                      const std::vector<Vector>& points);

}  // namespace copt

#endif  // COPT_DATASET_HPP
