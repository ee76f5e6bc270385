#include "copt/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace copt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// Header plus nonblank data rows.
std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetError::Kind::kUnreadable, path + ": cannot open file");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw DatasetError(DatasetError::Kind::kEmpty, path + ": empty file");
  return rows;
}

double parse_number(const std::string& cell, const std::string& path,
                    std::size_t line, const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE ||
      !std::isfinite(v)) {
    throw DatasetError(DatasetError::Kind::kNonNumeric,
                       path + ":" + std::to_string(line) + ": column '" + column +
                           "' has non-numeric value '" + cell + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& cell, const std::string& path,
                        std::size_t line, const std::string& column) {
  const double v = parse_number(cell, path, line, column);
  if (v < 0.0 || v != std::floor(v) || v > 1e9) {
    throw DatasetError(DatasetError::Kind::kBadLabel,
                       path + ":" + std::to_string(line) + ": column '" + column +
                           "' must hold a nonnegative integer, got '" + cell + "'");
  }
  return static_cast<std::size_t>(v);
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name, const std::string& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw DatasetError(DatasetError::Kind::kMissingColumn,
                       path + ": missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset ingest_csv(const std::string& path, const CsvSchema& schema) {
  const auto rows = read_rows(path);
  const auto& header = rows.front();
  if (rows.size() < 2) {
    throw DatasetError(DatasetError::Kind::kEmpty, path + ": no data rows");
  }
  const std::size_t label_col = column_index(header, schema.label, path);
  std::optional<std::size_t> group_col;
  if (schema.group) group_col = column_index(header, *schema.group, path);

  Dataset out;
  std::vector<std::size_t> feature_cols;
  if (schema.features.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == label_col || (group_col && c == *group_col)) continue;
      feature_cols.push_back(c);
      out.feature_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.features) {
      feature_cols.push_back(column_index(header, name, path));
      out.feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) {
    throw DatasetError(DatasetError::Kind::kMissingColumn, path + ": no feature columns");
  }

  LabeledData& d = out.data;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != header.size()) {
      throw DatasetError(DatasetError::Kind::kNonNumeric,
                         path + ":" + std::to_string(line) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(row.size()));
    }
    Vector x(static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      x(static_cast<Eigen::Index>(j)) =
          parse_number(row[feature_cols[j]], path, line, header[feature_cols[j]]);
    }
    d.features.push_back(std::move(x));
    d.labels.push_back(parse_index(row[label_col], path, line, schema.label));
    if (group_col) {
      d.groups.push_back(parse_index(row[*group_col], path, line, *schema.group));
    }
  }
  out.num_classes = *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  if (!d.groups.empty()) {
    d.num_groups = *std::max_element(d.groups.begin(), d.groups.end()) + 1;
  }
  return out;
}

DataSplit split_dataset(const LabeledData& data, std::uint64_t seed,
                        double train_fraction, double unlabeled_fraction) {
  data.validate();
  if (!(train_fraction >= 0.0) || !(unlabeled_fraction >= 0.0) ||
      train_fraction + unlabeled_fraction > 1.0) {
    throw std::invalid_argument("split fractions must be nonnegative and sum to at most 1");
  }
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const auto n_unlab = std::min(
      n - n_train,
      static_cast<std::size_t>(std::llround(unlabeled_fraction * static_cast<double>(n))));

  DataSplit split;
  for (LabeledData* part : {&split.train, &split.unlabeled, &split.test}) {
    part->num_groups = data.num_groups;
  }
  for (std::size_t r = 0; r < n; ++r) {
    LabeledData& part = r < n_train ? split.train
                        : r < n_train + n_unlab ? split.unlabeled
                                                : split.test;
    const std::size_t i = order[r];
    part.features.push_back(data.features[i]);
    part.labels.push_back(data.labels[i]);
    if (!data.groups.empty()) part.groups.push_back(data.groups[i]);
  }
  return split;
}

ClassProbModel load_probability_table(const std::string& path,
                                      const std::vector<Vector>& points) {
  const auto rows = read_rows(path);
  const auto& header = rows.front();
  if (header.size() < 2) {
    throw DatasetError(DatasetError::Kind::kMissingColumn,
                       path + ": need at least two class columns");
  }
  if (rows.size() - 1 != points.size()) {
    throw DatasetError(DatasetError::Kind::kEmpty,
                       path + ": expected " + std::to_string(points.size()) +
                           " rows, got " + std::to_string(rows.size() - 1));
  }
  std::vector<Vector> probs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw DatasetError(DatasetError::Kind::kNonNumeric,
                         path + ":" + std::to_string(r + 1) + ": wrong number of cells");
    }
    Vector p(static_cast<Eigen::Index>(header.size()));
    for (std::size_t c = 0; c < header.size(); ++c) {
      p(static_cast<Eigen::Index>(c)) = parse_number(rows[r][c], path, r + 1, header[c]);
    }
    probs.push_back(std::move(p));
  }
  return ClassProbModel::table(points, std::move(probs), path);
}

}  // namespace copt
