#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hiconform/classifier.hpp"
#include "hiconform/scores.hpp"

namespace hiconform::io {

/// A numeric CSV with optional `id` and `label` string columns.
///
/// Every other column must parse as a finite or non-finite double; the
/// meaning of those columns (features or class probabilities) is up to the
/// caller.
struct Table {
  std::vector<std::string> ids;
  std::optional<std::vector<std::string>> labels;
  std::vector<std::string> columns;
  std::vector<double> values;

  std::size_t rows() const noexcept { return ids.size(); }
};

Table read_table(std::istream& in, const std::string& source = "<stream>");
Table read_table(const std::filesystem::path& path);
void write_table(std::ostream& out, const Table& t);
void write_table(const std::filesystem::path& path, const Table& t);

/// One label per line; a leading `label` header line is skipped.
std::vector<std::string> read_labels(const std::filesystem::path& path);

FeatureMatrix to_features(const Table& t);
ProbMatrix to_probs(const Table& t);
Table from_features(const FeatureMatrix& x, const std::vector<std::string>* labels);
Table from_probs(const ProbMatrix& p, const std::vector<std::string>& ids,
                 const std::vector<std::string>* labels);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace hiconform::io
