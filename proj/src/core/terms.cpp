#include "core/terms.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace funres {

Term Term::linear(std::string col) {
  Term t;
  t.kind = TermKind::Linear;
  t.column = std::move(col);
  return t;
}

Term Term::pow(std::string col, int k) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "power term requires k >= 2");
  Term t;
  t.kind = TermKind::Power;
  t.column = std::move(col);
  t.power = k;
  return t;
}

Term Term::interaction(std::string a, std::string b) {
  Term t;
  t.kind = TermKind::Interaction;
  t.column = std::move(a);
  t.other_column = std::move(b);
  return t;
}

Term Term::spline(std::string col, int degree, int num_knots) {
  if (num_knots < 1) fail(ErrorCode::InvalidArgument, "spline requires at least one interior knot");
  if (degree < 1) fail(ErrorCode::InvalidArgument, "spline degree must be >= 1");
  Term t;
  t.kind = TermKind::Spline;
  t.column = std::move(col);
  t.degree = degree;
  t.num_knots = num_knots;
  return t;
}

std::string Term::label() const {
  switch (kind) {
    case TermKind::Intercept: return "(Intercept)";
    case TermKind::Linear: return column;
    case TermKind::Power: return column + "^" + std::to_string(power);
    case TermKind::Interaction: return column + ":" + other_column;
    case TermKind::Spline:
      return "bs(" + column + "," + std::to_string(degree) + "," + std::to_string(num_knots) + ")";
  }
  return {};
}

bool has_intercept(const TermSet& terms) {
  return std::any_of(terms.begin(), terms.end(), [](const Term& t) { return t.kind == TermKind::Intercept; });
}

namespace {

std::string strip(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  return s;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.'; });
}

int parse_int(const std::string& s, const std::string& ctx) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, "expected integer in " + ctx);
  }
  if (used != s.size()) fail(ErrorCode::Parse, "expected integer in " + ctx);
  return v;
}

std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

Term parse_term(const std::string& tok) {
  if (tok == "1") return Term::intercept();
  auto call = [&](const std::string& fn) -> std::vector<std::string> {
    if (tok.rfind(fn + "(", 0) != 0 || tok.back() != ')') return {};
    return split_top(tok.substr(fn.size() + 1, tok.size() - fn.size() - 2), ',');
  };
  if (auto args = call("bs"); !args.empty()) {
    if (args.size() != 3 || !valid_name(args[0])) fail(ErrorCode::Parse, "bs() expects (column, degree, knots): " + tok);
    return Term::spline(args[0], parse_int(args[1], tok), parse_int(args[2], tok));
  }
  if (auto args = call("pow"); !args.empty()) {
    if (args.size() != 2 || !valid_name(args[0])) fail(ErrorCode::Parse, "pow() expects (column, k): " + tok);
    return Term::pow(args[0], parse_int(args[1], tok));
  }
  if (auto caret = tok.find('^'); caret != std::string::npos) {
    auto name = tok.substr(0, caret);
    if (!valid_name(name)) fail(ErrorCode::Parse, "bad column name in term: " + tok);
    return Term::pow(name, parse_int(tok.substr(caret + 1), tok));
  }
  if (auto colon = tok.find(':'); colon != std::string::npos) {
    auto a = tok.substr(0, colon), b = tok.substr(colon + 1);
    if (!valid_name(a) || !valid_name(b)) fail(ErrorCode::Parse, "bad interaction term: " + tok);
    return Term::interaction(a, b);
  }
  if (!valid_name(tok)) fail(ErrorCode::Parse, "bad term: '" + tok + "'");
  return Term::linear(tok);
}

}  // namespace

TermSet parse_terms(const std::string& formula) {
  TermSet terms;
  const auto s = strip(formula);
  if (s.empty()) return terms;
  for (const auto& tok : split_top(s, '+')) {
    if (tok.empty()) fail(ErrorCode::Parse, "empty term in formula: " + formula);
    auto t = parse_term(tok);
    if (std::find(terms.begin(), terms.end(), t) != terms.end())
      fail(ErrorCode::InvalidArgument, "duplicate term: " + tok);
    terms.push_back(t);
  }
  return terms;
}

std::string format_terms(const TermSet& terms) {
  std::string out;
  for (const auto& t : terms) {
    if (!out.empty()) out += " + ";
    out += t.kind == TermKind::Intercept ? "1" : t.label();
  }
  return out;
}

// ---------------------------------------------------------------------------

BSplineBasis::BSplineBasis(int degree, std::vector<double> interior, double lower, double upper)
    : degree_(degree), interior_(std::move(interior)), lower_(lower), upper_(upper) {
  if (degree_ < 1) fail(ErrorCode::InvalidArgument, "spline degree must be >= 1");
  if (!(upper_ > lower_)) fail(ErrorCode::InvalidArgument, "spline boundary knots must be increasing");
  double prev = lower_;
  for (double k : interior_) {
    if (!(k > prev)) fail(ErrorCode::InvalidArgument, "spline knots must be strictly increasing");
    prev = k;
  }
  if (!(upper_ > prev)) fail(ErrorCode::InvalidArgument, "spline knots must be strictly increasing");
  knots_.assign(static_cast<std::size_t>(degree_ + 1), lower_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), static_cast<std::size_t>(degree_ + 1), upper_);
}

BSplineBasis BSplineBasis::at_quantiles(std::span<const double> values, int degree, int num_knots) {
  if (num_knots < 1) fail(ErrorCode::InvalidArgument, "spline requires at least one interior knot");
  if (values.empty()) fail(ErrorCode::EmptyInput, "spline column is empty");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n1 = static_cast<double>(v.size() - 1);
  std::vector<double> interior;
  for (int k = 1; k <= num_knots; ++k) {
    const double h = n1 * k / (num_knots + 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    interior.push_back(v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]));
  }
  return BSplineBasis(degree, std::move(interior), v.front(), v.back());
}

std::vector<double> BSplineBasis::evaluate(double x) const {
  const int m = size();
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  x = std::clamp(x, lower_, upper_);
  // Span index s with knots_[s] <= x < knots_[s+1]; the upper boundary uses the last span.
  int s = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), x) - knots_.begin()) - 1;
  s = std::clamp(s, degree_, m - 1);

  // de Boor's triangular recurrence for the degree+1 non-zero functions.
  std::vector<double> n(static_cast<std::size_t>(degree_ + 1), 0.0), left(n.size()), right(n.size());
  n[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(s + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(s + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = denom > 0 ? n[static_cast<std::size_t>(r)] / denom : 0.0;
      n[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    n[static_cast<std::size_t>(j)] = saved;
  }
  for (int j = 0; j <= degree_; ++j) out[static_cast<std::size_t>(s - degree_ + j)] = n[static_cast<std::size_t>(j)];
  return out;
}

// ---------------------------------------------------------------------------

DesignBasis::DesignBasis(const TermSet& terms, const Dataset& data) : terms_(terms), source_names_(data.names()) {
  for (const auto& t : terms) {
    Resolved r{t, -1, -1, {}};
    switch (t.kind) {
      case TermKind::Intercept:
        column_names_.push_back(t.label());
        break;
      case TermKind::Linear:
        r.a = static_cast<Eigen::Index>(data.column_index(t.column));
        column_names_.push_back(t.label());
        break;
      case TermKind::Power:
        if (t.power < 2) fail(ErrorCode::InvalidArgument, "power term requires k >= 2");
        r.a = static_cast<Eigen::Index>(data.column_index(t.column));
        column_names_.push_back(t.label());
        break;
      case TermKind::Interaction:
        r.a = static_cast<Eigen::Index>(data.column_index(t.column));
        r.b = static_cast<Eigen::Index>(data.column_index(t.other_column));
        column_names_.push_back(t.label());
        break;
      case TermKind::Spline: {
        if (t.num_knots < 1) fail(ErrorCode::InvalidArgument, "spline requires at least one interior knot");
        r.a = static_cast<Eigen::Index>(data.column_index(t.column));
        const Eigen::VectorXd col = data.x().col(r.a);
        r.spline = BSplineBasis::at_quantiles(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                              t.degree, t.num_knots);
        // The first basis function is dropped: the full basis sums to one.
        for (int k = 1; k < r.spline.size(); ++k) column_names_.push_back(t.label() + std::to_string(k));
        break;
      }
    }
    resolved_.push_back(std::move(r));
  }
}

Eigen::RowVectorXd DesignBasis::row(std::span<const double> raw) const {
  if (raw.size() != source_names_.size())
    fail(ErrorCode::InvalidArgument, "covariate row has " + std::to_string(raw.size()) + " values, expected " +
                                         std::to_string(source_names_.size()));
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(width()));
  Eigen::Index c = 0;
  for (const auto& r : resolved_) {
    switch (r.term.kind) {
      case TermKind::Intercept: out(c++) = 1.0; break;
      case TermKind::Linear: out(c++) = raw[static_cast<std::size_t>(r.a)]; break;
      case TermKind::Power: out(c++) = std::pow(raw[static_cast<std::size_t>(r.a)], r.term.power); break;
      case TermKind::Interaction:
        out(c++) = raw[static_cast<std::size_t>(r.a)] * raw[static_cast<std::size_t>(r.b)];
        break;
      case TermKind::Spline: {
        const auto b = r.spline.evaluate(raw[static_cast<std::size_t>(r.a)]);
        for (std::size_t k = 1; k < b.size(); ++k) out(c++) = b[k];
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd DesignBasis::matrix(const Dataset& data) const {
  if (data.names() != source_names_)
    fail(ErrorCode::InvalidArgument, "dataset columns differ from the columns the design was built on");
  const auto n = static_cast<Eigen::Index>(data.rows());
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(width()));
  std::vector<double> raw(source_names_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < raw.size(); ++j) raw[j] = data.x()(i, static_cast<Eigen::Index>(j));
    m.row(i) = row(raw);
  }
  return m;
}

Eigen::MatrixXd design_matrix(const Dataset& data, const TermSet& terms) {
  return DesignBasis(terms, data).matrix(data);
}

}  // namespace funres
