#include "casestudy/pipeline.hpp"

#include "core/error.hpp"
#include "diagnostics/diagnostics.hpp"
#include "diagnostics/plots.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace funres {

using nlohmann::json;

bool OutlierRule::matches(double v) const {
  if (op == ">") return v > value;
  if (op == ">=") return v >= value;
  if (op == "<") return v < value;
  if (op == "<=") return v <= value;
  fail(ErrorCode::InvalidArgument, "unknown outlier operator '" + op + "'");
}

std::string OutlierRule::describe() const {
  std::ostringstream os;
  os << column << ' ' << op << ' ' << value;
  return os.str();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_object(const std::string& text, const std::set<std::string>& allowed) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::Parse, "config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  return j;
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

void take_plots(const json& j, PlotConfig& p) {
  if (!j.contains("plots")) return;
  const json& pj = j.at("plots");
  if (!pj.is_object()) fail(ErrorCode::InvalidArgument, "config key 'plots' must be an object");
  for (const auto& [key, _] : pj.items())
    if (key != "scale" && key != "x_bins" && key != "y_bins")
      fail(ErrorCode::InvalidArgument, "unknown plots key '" + key + "'");
  std::string scale = scale_name(p.scale);
  take(pj, "scale", scale);
  p.scale = parse_scale(scale);
  take(pj, "x_bins", p.x_bins);
  take(pj, "y_bins", p.y_bins);
  if (p.x_bins < 1 || p.y_bins < 1) fail(ErrorCode::InvalidArgument, "plot bins must be positive");
}

json plots_json(const PlotConfig& p) { return {{"scale", scale_name(p.scale)}, {"x_bins", p.x_bins}, {"y_bins", p.y_bins}}; }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string stage_file(int stage, const std::string& what) { return "stage" + std::to_string(stage) + "_" + what; }

std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
  return s;
}

StageReport run_stage(int index, std::string name, std::string description, const ModelSpec& spec, const Dataset& data,
                      const std::vector<std::string>& covariates, const PlotConfig& plots,
                      const std::filesystem::path& dir) {
  StageReport st;
  st.name = std::move(name);
  st.description = std::move(description);
  st.spec = spec;
  st.model = fit(spec, data);
  st.aic = st.model.aic();
  st.dispersion = st.model.dispersion;
  st.nobs = data.rows();

  const ResidualSet set = compute_residuals(st.model, data);
  st.excluded = set.excluded.size();
  const FnFnCurve curve = fnfn(set.residuals);
  st.sup_dev = curve.sup_dev;

  const std::string model_file = stage_file(index, "model.json");
  write_text_file((dir / model_file).string(), st.model.summary_json());
  st.artifacts.push_back({"model", "", "", model_file});

  const std::string res_file = stage_file(index, "residuals.csv");
  write_text_file((dir / res_file).string(), residual_csv(set));
  st.artifacts.push_back({"residuals", "", "", res_file});

  const std::string fn_svg = stage_file(index, "fnfn.svg"), fn_csv = stage_file(index, "fnfn.csv");
  write_text_file((dir / fn_svg).string(), fnfn_svg(curve, {st.name + ": Fn-Fn", "t"}));
  write_text_file((dir / fn_csv).string(), fnfn_csv(curve));
  st.artifacts.push_back({"fnfn", "", fn_svg, fn_csv});

  HeatmapOptions opts;
  opts.scale = plots.scale;
  opts.x_bins = plots.x_bins;
  opts.y_bins = plots.y_bins;
  for (const auto& col : covariates) {
    const auto x = covariate_for(set, data.column(col));
    st.lowess_range[col] = residual_lowess(set.residuals, x, Scale::Normal).range();
    const HeatmapGrid grid = heatmap(set.residuals, x, opts);
    const LowessFit overlay = residual_lowess(set.residuals, x, plots.scale);
    const std::string base = stage_file(index, "heatmap_" + safe_name(col));
    write_text_file((dir / (base + ".svg")).string(), heatmap_svg(grid, {st.name + ": residuals vs " + col, col}, &overlay));
    write_text_file((dir / (base + ".csv")).string(), heatmap_csv(grid));
    write_text_file((dir / (base + "_bins.csv")).string(), heatmap_bins_csv(grid));
    write_text_file((dir / (base + "_lowess.csv")).string(), lowess_csv(overlay));
    st.artifacts.push_back({"heatmap", col, base + ".svg", base + ".csv"});
  }
  return st;
}

ModelSpec adjacent_spec(const std::vector<std::string>& predictors, int max_category) {
  ModelSpec s;
  s.family = Family::AdjacentCategory;
  s.max_category = max_category;
  for (const auto& p : predictors) s.terms.push_back(Term::linear(p));
  return s;
}

void require_columns(const CsvTable& t, const std::vector<std::string>& cols, const std::string& what) {
  for (const auto& c : cols)
    if (std::find(t.header.begin(), t.header.end(), c) == t.header.end())
      fail(ErrorCode::UnknownColumn, what + " is missing column '" + c + "'");
}

std::size_t column_of(const CsvTable& t, const std::string& name) {
  return static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), name) - t.header.begin());
}

}  // namespace

WineConfig parse_wine_config(const std::string& text) {
  const json j = parse_object(text, {"output_dir", "delimiter", "predictors", "outliers", "quadratic", "min_quality",
                                     "max_quality", "plots"});
  WineConfig c;
  take(j, "output_dir", c.output_dir);
  std::string delim(1, c.delimiter);
  take(j, "delimiter", delim);
  if (delim.size() != 1) fail(ErrorCode::InvalidArgument, "delimiter must be one character");
  c.delimiter = delim[0];
  take(j, "predictors", c.predictors);
  if (c.predictors.empty()) fail(ErrorCode::InvalidArgument, "at least one predictor is required");
  take(j, "quadratic", c.quadratic);
  take(j, "min_quality", c.min_quality);
  take(j, "max_quality", c.max_quality);
  if (c.max_quality <= c.min_quality) fail(ErrorCode::InvalidArgument, "max_quality must exceed min_quality");
  if (j.contains("outliers")) {
    if (!j.at("outliers").is_array()) fail(ErrorCode::InvalidArgument, "outliers must be an array");
    c.outliers.clear();
    for (const auto& r : j.at("outliers")) {
      OutlierRule rule;
      take(r, "column", rule.column);
      take(r, "op", rule.op);
      take(r, "value", rule.value);
      rule.matches(0.0);
      c.outliers.push_back(rule);
    }
  }
  take_plots(j, c.plots);
  return c;
}

BikeConfig parse_bike_config(const std::string& text) {
  const json j = parse_object(text, {"output_dir", "hour_df", "smooth_df", "degree", "winter_season", "year", "plots"});
  BikeConfig c;
  take(j, "output_dir", c.output_dir);
  take(j, "hour_df", c.hour_df);
  take(j, "smooth_df", c.smooth_df);
  take(j, "degree", c.degree);
  take(j, "winter_season", c.winter_season);
  take(j, "year", c.year);
  if (c.degree < 1) fail(ErrorCode::InvalidArgument, "spline degree must be >= 1");
  if (c.hour_df <= c.degree || c.smooth_df <= c.degree)
    fail(ErrorCode::InvalidArgument, "spline df must exceed the degree");
  take_plots(j, c.plots);
  return c;
}

std::string to_json(const WineConfig& c) {
  json rules = json::array();
  for (const auto& r : c.outliers) rules.push_back({{"column", r.column}, {"op", r.op}, {"value", r.value}});
  json j{{"output_dir", c.output_dir},   {"delimiter", std::string(1, c.delimiter)},
         {"predictors", c.predictors},   {"outliers", rules},
         {"quadratic", c.quadratic},     {"min_quality", c.min_quality},
         {"max_quality", c.max_quality}, {"plots", plots_json(c.plots)}};
  return j.dump(2);
}

std::string to_json(const BikeConfig& c) {
  json j{{"output_dir", c.output_dir}, {"hour_df", c.hour_df},
         {"smooth_df", c.smooth_df},   {"degree", c.degree},
         {"winter_season", c.winter_season}, {"year", c.year},
         {"plots", plots_json(c.plots)}};
  return j.dump(2);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset load_wine(const std::string& path, const WineConfig& config) {
  const CsvTable t = read_csv_table(path, config.delimiter, true);
  std::vector<std::string> need = config.predictors;
  need.push_back("quality");
  for (const auto& r : config.outliers) need.push_back(r.column);
  require_columns(t, need, "wine table");

  const auto q = column_of(t, "quality");
  std::vector<std::string> names = config.predictors;
  for (const auto& r : config.outliers)
    if (std::find(names.begin(), names.end(), r.column) == names.end()) names.push_back(r.column);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()));
  std::vector<int> y(t.rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const double v = row[q];
    if (v != std::floor(v) || v < config.min_quality || v > config.max_quality)
      fail(ErrorCode::Domain, "quality " + std::to_string(v) + " outside " + std::to_string(config.min_quality) + ".." +
                                  std::to_string(config.max_quality) + " at row " + std::to_string(i + 1));
    y[static_cast<std::size_t>(i)] = static_cast<int>(v) - config.min_quality;
    for (std::size_t c = 0; c < names.size(); ++c) x(i, static_cast<Eigen::Index>(c)) = row[column_of(t, names[c])];
  }
  return Dataset(std::move(y), std::move(x), std::move(names));
}

Dataset load_bike(const std::string& path, const BikeConfig& config) {
  const CsvTable t = read_csv_table(path, ',', true, {"dteday"});
  const std::vector<std::string> names = {"hour", "temp", "humidity", "windspeed", "winter", "workingday", "weather"};
  const bool raw = std::find(t.header.begin(), t.header.end(), "cnt") != t.header.end();
  if (raw)
    require_columns(t, {"cnt", "hr", "temp", "hum", "windspeed", "season", "workingday", "weathersit", "yr"}, "hourly bike table");
  else
    require_columns(t, {"count", "hour", "temp", "humidity", "windspeed", "winter", "workingday", "weather"}, "bike table");

  std::vector<int> y;
  std::vector<std::array<double, 7>> rows;
  for (const auto& row : t.rows) {
    auto at = [&](const char* c) { return row[column_of(t, c)]; };
    double count;
    std::array<double, 7> r{};
    if (raw) {
      if (at("yr") != config.year) continue;
      count = at("cnt");
      r = {at("hr"), at("temp"), at("hum"), at("windspeed"), at("season") == config.winter_season ? 1.0 : 0.0,
           at("workingday"), at("weathersit")};
    } else {
      count = at("count");
      r = {at("hour"), at("temp"), at("humidity"), at("windspeed"), at("winter"), at("workingday"), at("weather")};
    }
    if (count < 0 || count != std::floor(count)) fail(ErrorCode::InvalidArgument, "counts must be non-negative integers");
    y.push_back(static_cast<int>(count));
    rows.push_back(r);
  }
  if (rows.empty()) fail(ErrorCode::EmptyInput, "no bike rows selected from " + path);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 7);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < 7; ++c) x(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  return Dataset(std::move(y), std::move(x), names);
}

PipelineReport wine_pipeline(const std::string& csv_path, const WineConfig& config) {
  PipelineReport rep;
  rep.pipeline = "wine";
  rep.input_path = csv_path;
  rep.input_hash = fnv1a_hex(read_file(csv_path));
  rep.config_json = to_json(config);
  rep.sign_convention =
      "adjacent-category logit: log(p_j / p_{j+1}) = alpha_j + x'beta with j = quality - " +
      std::to_string(config.min_quality) + "; a positive coefficient moves probability toward lower quality";
  const Dataset data = load_wine(csv_path, config);
  rep.rows_read = data.rows();
  const int J = config.max_quality - config.min_quality;

  std::vector<bool> drop(data.rows(), false);
  for (const auto& rule : config.outliers) {
    CleaningEntry e{rule.describe(), {}};
    const auto col = data.column(rule.column);
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (rule.matches(col(static_cast<Eigen::Index>(i)))) {
        e.rows.push_back(i + 1);
        drop[i] = true;
      }
    rep.cleaning.push_back(std::move(e));
  }
  const Dataset cleaned = data.filter([&](std::size_t i) { return !drop[i]; });
  rep.rows_removed = data.rows() - cleaned.rows();

  std::filesystem::create_directories(config.output_dir);
  const std::filesystem::path dir(config.output_dir);
  const ModelSpec plain = adjacent_spec(config.predictors, J);
  rep.stages.push_back(run_stage(1, "initial", "adjacent-category fit on all rows", plain, data, config.predictors,
                                 config.plots, dir));
  rep.stages.push_back(run_stage(2, "outliers removed",
                                 "refit after removing " + std::to_string(rep.rows_removed) + " configured outlier rows",
                                 plain, cleaned, config.predictors, config.plots, dir));
  ModelSpec quad = plain;
  quad.terms.push_back(Term::pow(config.quadratic, 2));
  rep.stages.push_back(run_stage(3, "quadratic", "stage 2 plus " + config.quadratic + "^2", quad, cleaned,
                                 config.predictors, config.plots, dir));
  return rep;
}

PipelineReport bike_pipeline(const std::string& csv_path, const BikeConfig& config) {
  PipelineReport rep;
  rep.pipeline = "bike";
  rep.input_path = csv_path;
  rep.input_hash = fnv1a_hex(read_file(csv_path));
  rep.config_json = to_json(config);
  rep.sign_convention = "log-linear mean: log E[count] = x'beta";
  const Dataset data = load_bike(csv_path, config);
  rep.rows_read = data.rows();

  std::filesystem::create_directories(config.output_dir);
  const std::filesystem::path dir(config.output_dir);
  const std::vector<std::string> smooth = {"hour", "temp", "humidity", "windspeed"};

  ModelSpec linear;
  linear.family = Family::Poisson;
  linear.terms = {Term::intercept()};
  for (const auto& c : data.names()) linear.terms.push_back(Term::linear(c));

  ModelSpec spline;
  spline.family = Family::Poisson;
  spline.terms = {Term::intercept(), Term::spline("hour", config.degree, config.hour_df - config.degree)};
  for (const char* c : {"temp", "humidity", "windspeed"})
    spline.terms.push_back(Term::spline(c, config.degree, config.smooth_df - config.degree));
  for (const char* c : {"winter", "workingday", "weather"}) spline.terms.push_back(Term::linear(c));

  ModelSpec quasi = spline;
  quasi.family = Family::QuasiPoisson;

  rep.stages.push_back(run_stage(1, "initial", "Poisson with linear effects", linear, data, smooth, config.plots, dir));
  rep.stages.push_back(run_stage(2, "splines", "Poisson with regression splines on hour, temp, humidity, windspeed",
                                 spline, data, smooth, config.plots, dir));
  rep.stages.push_back(
      run_stage(3, "quasi-poisson", "stage 2 with an estimated dispersion", quasi, data, smooth, config.plots, dir));
  return rep;
}

std::string PipelineReport::to_json() const {
  json cleaning_rules = json::array();
  for (const auto& c : cleaning) cleaning_rules.push_back({{"rule", c.rule}, {"rows", c.rows}});
  json st = json::array();
  for (const auto& s : stages) {
    json arts = json::array();
    for (const auto& a : s.artifacts)
      arts.push_back({{"kind", a.kind}, {"covariate", a.covariate}, {"svg", a.svg}, {"data", a.data}});
    json ranges = json::object();
    for (const auto& [k, v] : s.lowess_range) ranges[k] = num(v);
    st.push_back({{"name", s.name},
                  {"description", s.description},
                  {"family", family_name(s.spec.family)},
                  {"terms", format_terms(s.spec.terms)},
                  {"summary", json::parse(s.model.summary_json())},
                  {"aic", num(s.aic)},
                  {"dispersion", num(s.dispersion)},
                  {"sup_dev", num(s.sup_dev)},
                  {"nobs", s.nobs},
                  {"excluded", s.excluded},
                  {"lowess_range", ranges},
                  {"artifacts", arts}});
  }
  json j{{"pipeline", pipeline},
         {"input", {{"path", input_path}, {"fnv1a64", input_hash}, {"rows", rows_read}}},
         {"config", json::parse(config_json)},
         {"sign_convention", sign_convention},
         {"cleaning", {{"rules", cleaning_rules}, {"rows_removed", rows_removed}}},
         {"stages", st}};
  return j.dump(2);
}

std::string write_report(const PipelineReport& report, const std::string& output_dir) {
  std::filesystem::create_directories(output_dir);
  const std::filesystem::path dir(output_dir);
  write_text_file((dir / "report.json").string(), report.to_json());

  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
      }
    }
    return o;
  };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  std::ostringstream h;
  h << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << esc(report.pipeline)
    << " case study</title>\n<style>body{font-family:sans-serif;margin:2em}img{width:420px;margin:4px;border:1px solid "
       "#ddd}table{border-collapse:collapse}td,th{padding:2px 8px;border:1px solid #ccc}</style></head><body>\n";
  h << "<h1>" << esc(report.pipeline) << " case study</h1>\n";
  h << "<p>Input: " << esc(report.input_path) << " (" << report.rows_read << " rows, fnv1a64 " << report.input_hash
    << ")</p>\n<p>" << esc(report.sign_convention) << "</p>\n";
  if (!report.cleaning.empty()) {
    h << "<h2>Cleaning</h2><ul>\n";
    for (const auto& c : report.cleaning) h << "<li>" << esc(c.rule) << ": " << c.rows.size() << " rows</li>\n";
    h << "</ul><p>Rows removed: " << report.rows_removed << "</p>\n";
  }
  h << "<h2>Stages</h2><table><tr><th>stage</th><th>terms</th><th>n</th><th>AIC</th><th>dispersion</th><th>Fn-Fn "
       "sup dev</th></tr>\n";
  for (std::size_t k = 0; k < report.stages.size(); ++k) {
    const auto& s = report.stages[k];
    h << "<tr><td>" << k + 1 << ". " << esc(s.name) << "</td><td>" << esc(format_terms(s.spec.terms)) << "</td><td>"
      << s.nobs << "</td><td>" << (std::isfinite(s.aic) ? fmt(s.aic) : "NA") << "</td><td>" << fmt(s.dispersion)
      << "</td><td>" << fmt(s.sup_dev) << "</td></tr>\n";
  }
  h << "</table>\n";
  for (std::size_t k = 0; k < report.stages.size(); ++k) {
    const auto& s = report.stages[k];
    h << "<h2>Stage " << k + 1 << ": " << esc(s.name) << "</h2>\n<p>" << esc(s.description) << "</p>\n<div>\n";
    for (const auto& a : s.artifacts) {
      if (a.svg.empty()) {
        h << "<a href=\"" << esc(a.data) << "\">" << esc(a.data) << "</a><br>\n";
        continue;
      }
      h << "<a href=\"" << esc(a.data) << "\"><img src=\"" << esc(a.svg) << "\" alt=\"" << esc(a.kind + " " + a.covariate)
        << "\"></a>\n";
    }
    h << "</div>\n";
  }
  h << "</body></html>\n";
  const auto index = (dir / "index.html").string();
  write_text_file(index, h.str());
  return index;
}

}  // namespace funres
