#pragma once

#include "core/dataset.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace funres {

enum class TermKind { Intercept, Linear, Power, Interaction, Spline };

struct Term {
  TermKind kind = TermKind::Intercept;
  std::string column;        // linear, power, spline, first factor of interaction
  std::string other_column;  // second factor of interaction
  int power = 2;
  int degree = 3;
  int num_knots = 1;  // interior knots

  static Term intercept() { return {}; }
  static Term linear(std::string col);
  static Term pow(std::string col, int k);
  static Term interaction(std::string a, std::string b);
  static Term spline(std::string col, int degree, int num_knots);

  std::string label() const;
  bool operator==(const Term&) const = default;
};

using TermSet = std::vector<Term>;

/// Parses "1 + x + x^2 + x1:x2 + bs(hour, 3, 7)". bs(col, degree, interior_knots).
TermSet parse_terms(const std::string& formula);
std::string format_terms(const TermSet& terms);
bool has_intercept(const TermSet& terms);

/// Clamped B-spline basis with interior knots; evaluation clamps x to the boundary.
class BSplineBasis {
 public:
  BSplineBasis() = default;
  BSplineBasis(int degree, std::vector<double> interior, double lower, double upper);

  /// Interior knots at equally spaced quantiles (type-7 interpolation) of `values`.
  static BSplineBasis at_quantiles(std::span<const double> values, int degree, int num_knots);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(interior_.size()) + degree_ + 1; }
  const std::vector<double>& interior_knots() const { return interior_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  /// All size() basis functions at x; they sum to one.
  std::vector<double> evaluate(double x) const;

 private:
  int degree_ = 3;
  std::vector<double> interior_;
  double lower_ = 0, upper_ = 1;
  std::vector<double> knots_;
};

/// A TermSet resolved against a training dataset: column lookups fixed and spline
/// knots frozen, so new covariate rows map onto the same design columns.
class DesignBasis {
 public:
  DesignBasis() = default;
  DesignBasis(const TermSet& terms, const Dataset& data);

  const TermSet& terms() const { return terms_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::vector<std::string>& source_columns() const { return source_names_; }
  std::size_t width() const { return column_names_.size(); }

  /// Design row for a raw covariate row laid out like the training dataset.
  Eigen::RowVectorXd row(std::span<const double> raw) const;
  Eigen::MatrixXd matrix(const Dataset& data) const;

 private:
  struct Resolved {
    Term term;
    Eigen::Index a = -1, b = -1;
    BSplineBasis spline;
  };
  TermSet terms_;
  std::vector<Resolved> resolved_;
  std::vector<std::string> column_names_;
  std::vector<std::string> source_names_;
};

/// n x q design matrix; columns in term order, intercept column all ones.
Eigen::MatrixXd design_matrix(const Dataset& data, const TermSet& terms);

}  // namespace funres
