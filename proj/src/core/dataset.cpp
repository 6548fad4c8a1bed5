#include "core/dataset.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace funres {

Dataset::Dataset(std::vector<int> y, Eigen::MatrixXd x, std::vector<std::string> names)
    : y_(std::move(y)), x_(std::move(x)), names_(std::move(names)) {
  if (y_.empty()) fail(ErrorCode::EmptyInput, "dataset has no rows");
  if (static_cast<std::size_t>(x_.rows()) != y_.size())
    fail(ErrorCode::InvalidArgument, "outcome length does not match covariate rows");
  if (static_cast<std::size_t>(x_.cols()) != names_.size())
    fail(ErrorCode::InvalidArgument, "column names do not match covariate columns");
  for (int v : y_)
    if (v < 0) fail(ErrorCode::InvalidArgument, "negative outcome code");
  if (!x_.allFinite()) fail(ErrorCode::InvalidArgument, "covariates contain missing or non-finite values");
  for (std::size_t i = 0; i < names_.size(); ++i)
    for (std::size_t j = i + 1; j < names_.size(); ++j)
      if (names_[i] == names_[j]) fail(ErrorCode::InvalidArgument, "duplicate column name: " + names_[i]);
}

std::optional<std::size_t> Dataset::find_column(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t Dataset::column_index(const std::string& name) const {
  auto idx = find_column(name);
  if (!idx) fail(ErrorCode::UnknownColumn, "unknown column: " + name);
  return *idx;
}

Eigen::VectorXd Dataset::column(const std::string& name) const {
  return x_.col(static_cast<Eigen::Index>(column_index(name)));
}

int Dataset::max_outcome() const { return *std::max_element(y_.begin(), y_.end()); }

Dataset Dataset::filter(const std::function<bool(std::size_t)>& keep) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < y_.size(); ++i)
    if (keep(i)) rows.push_back(i);
  return select_rows(rows);
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& rows) const {
  if (rows.empty()) fail(ErrorCode::EmptyInput, "row selection is empty");
  std::vector<int> y;
  y.reserve(rows.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= y_.size()) fail(ErrorCode::InvalidArgument, "row index out of range");
    y.push_back(y_[rows[k]]);
    x.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(rows[k]));
  }
  return Dataset(std::move(y), std::move(x), names_);
}

Dataset Dataset::with_column(const std::string& name, const Eigen::VectorXd& values) const {
  if (static_cast<std::size_t>(values.size()) != rows())
    fail(ErrorCode::InvalidArgument, "derived column has wrong length");
  Eigen::MatrixXd x(x_.rows(), x_.cols() + 1);
  x << x_, values;
  auto names = names_;
  names.push_back(name);
  return Dataset(y_, std::move(x), std::move(names));
}

// RFC-4180 records: quoted fields may contain delimiters, newlines and "" escapes.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(record);
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // tolerated before \n
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) fail(ErrorCode::Parse, "unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, std::size_t line, const std::string& column) {
  std::string s = trim(raw);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan")
    fail(ErrorCode::Parse, "missing value in column '" + column + "' at line " + std::to_string(line));
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    fail(ErrorCode::Parse, "non-numeric value '" + s + "' in column '" + column + "' at line " +
                               std::to_string(line));
  return v;
}

}  // namespace

CsvTable read_csv_table(const std::string& path, char delimiter, bool normalize_names,
                        const std::vector<std::string>& ignore) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  auto records = parse_csv_records(buf.str(), delimiter);
  if (records.empty()) fail(ErrorCode::Parse, "empty CSV file: " + path);

  CsvTable table;
  std::vector<bool> keep;
  for (auto name : records.front()) {
    name = trim(name);
    if (normalize_names) std::replace(name.begin(), name.end(), ' ', '.');
    bool kept = std::find(ignore.begin(), ignore.end(), name) == ignore.end();
    keep.push_back(kept);
    if (kept) table.header.push_back(name);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != keep.size())
      fail(ErrorCode::Parse, "line " + std::to_string(r + 1) + " has " + std::to_string(rec.size()) +
                                 " fields, expected " + std::to_string(keep.size()));
    std::vector<double> row;
    row.reserve(table.header.size());
    for (std::size_t c = 0; c < rec.size(); ++c)
      if (keep[c]) row.push_back(parse_number(rec[c], r + 1, table.header[row.size()]));
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) fail(ErrorCode::EmptyInput, "CSV has a header but no data rows: " + path);
  return table;
}

Dataset dataset_from_table(const CsvTable& table, const std::string& outcome) {
  auto it = std::find(table.header.begin(), table.header.end(), outcome);
  if (it == table.header.end()) fail(ErrorCode::UnknownColumn, "outcome column not found: " + outcome);
  const auto ycol = static_cast<std::size_t>(it - table.header.begin());

  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (c != ycol) names.push_back(table.header[c]);

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()));
  std::vector<int> y;
  y.reserve(table.rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    double v = row[ycol];
    if (v < 0 || v != std::floor(v) || v > 1e9)
      fail(ErrorCode::InvalidArgument, "outcome must be a non-negative integer (row " + std::to_string(i + 1) + ")");
    y.push_back(static_cast<int>(v));
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < row.size(); ++c)
      if (c != ycol) x(i, k++) = row[c];
  }
  return Dataset(std::move(y), std::move(x), std::move(names));
}

Dataset read_csv(const std::string& path, const CsvOptions& opts) {
  if (opts.outcome.empty()) fail(ErrorCode::InvalidArgument, "outcome column name is required");
  return dataset_from_table(read_csv_table(path, opts.delimiter, opts.normalize_names), opts.outcome);
}

}  // namespace funres
