#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace funres {

/// Outcome codes plus a named covariate matrix. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<int> y, Eigen::MatrixXd x, std::vector<std::string> names);

  std::size_t rows() const { return y_.size(); }
  std::size_t cols() const { return names_.size(); }

  const std::vector<int>& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> find_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;  // throws UnknownColumn
  Eigen::VectorXd column(const std::string& name) const;

  int max_outcome() const;

  /// Keep only rows for which `keep(i)` is true. Throws EmptyInput if none remain.
  Dataset filter(const std::function<bool(std::size_t)>& keep) const;
  Dataset select_rows(const std::vector<std::size_t>& rows) const;
  /// Appends a derived column; `values` must have rows() entries.
  Dataset with_column(const std::string& name, const Eigen::VectorXd& values) const;

 private:
  std::vector<int> y_;
  Eigen::MatrixXd x_;
  std::vector<std::string> names_;
};

struct CsvOptions {
  char delimiter = ',';
  std::string outcome;
  /// Replace spaces in header names with '.', e.g. "fixed acidity" -> "fixed.acidity".
  bool normalize_names = true;
};

/// A parsed CSV table of numeric cells. Missing or non-numeric cells are rejected.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Columns named in `ignore` (after normalization) are dropped before numeric conversion.
CsvTable read_csv_table(const std::string& path, char delimiter = ',', bool normalize_names = true,
                        const std::vector<std::string>& ignore = {});
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text, char delimiter);

/// Loads a dataset; the outcome column must hold non-negative integers.
Dataset read_csv(const std::string& path, const CsvOptions& opts);
Dataset dataset_from_table(const CsvTable& table, const std::string& outcome);

}  // namespace funres
