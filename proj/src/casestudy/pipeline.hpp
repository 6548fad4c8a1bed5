#pragma once

#include "core/dataset.hpp"
#include "models/model.hpp"
#include "residuals/residual.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace funres {

/// Drops a row when `column op value` holds; op is one of > >= < <=.
struct OutlierRule {
  std::string column;
  std::string op = ">";
  double value = 0.0;

  bool matches(double v) const;
  std::string describe() const;
};

struct PlotConfig {
  Scale scale = Scale::Normal;
  int x_bins = 60;
  int y_bins = 60;
};

struct WineConfig {
  std::string output_dir = "wine_report";
  char delimiter = ';';
  std::vector<std::string> predictors = {"volatile.acidity", "alcohol",           "sulphates", "fixed.acidity",
                                         "residual.sugar",   "free.sulfur.dioxide", "pH",        "density"};
  std::vector<OutlierRule> outliers = {{"fixed.acidity", ">", 11.0},
                                       {"residual.sugar", ">", 40.0},
                                       {"density", ">", 1.01}};
  std::string quadratic = "free.sulfur.dioxide";
  int min_quality = 3;
  int max_quality = 9;
  PlotConfig plots;
};

struct BikeConfig {
  std::string output_dir = "bike_report";
  int hour_df = 10;
  int smooth_df = 5;
  int degree = 3;
  /// Raw hour.csv input only: season code treated as winter, and the yr code kept.
  int winter_season = 4;
  int year = 1;
  PlotConfig plots;
};

/// Throws Parse / InvalidArgument on malformed JSON; unknown keys are rejected.
WineConfig parse_wine_config(const std::string& json_text);
BikeConfig parse_bike_config(const std::string& json_text);
std::string to_json(const WineConfig& c);
std::string to_json(const BikeConfig& c);

struct Artifact {
  std::string kind;  // fnfn | heatmap | residuals | model
  std::string covariate;
  std::string svg;   // relative to the output directory; empty when none
  std::string data;  // csv or json, relative to the output directory
};

struct StageReport {
  std::string name;
  std::string description;
  ModelSpec spec;
  FittedModel model;
  double aic = 0.0;
  double dispersion = 1.0;
  double sup_dev = 0.0;
  std::size_t nobs = 0;
  std::size_t excluded = 0;
  std::map<std::string, double> lowess_range;  // normal-scale LOWESS range per plotted covariate
  std::vector<Artifact> artifacts;
};

struct CleaningEntry {
  std::string rule;
  std::vector<std::size_t> rows;  // 1-based data rows matched by the rule
};

struct PipelineReport {
  std::string pipeline;
  std::string input_path;
  std::string input_hash;  // FNV-1a 64 of the input bytes, hex
  std::string config_json;
  std::string sign_convention;
  std::size_t rows_read = 0;
  std::vector<CleaningEntry> cleaning;
  std::size_t rows_removed = 0;
  std::vector<StageReport> stages;

  std::string to_json() const;
};

/// Wine table with y = quality - min_quality and the configured predictors.
/// Throws UnknownColumn for missing columns and Domain for out-of-range quality.
Dataset load_wine(const std::string& path, const WineConfig& config);
/// Accepts either a prepared table (count, hour, temp, humidity, windspeed, winter,
/// workingday, weather) or the public hourly file (cnt, hr, hum, season, yr, weathersit, ...).
Dataset load_bike(const std::string& path, const BikeConfig& config);

/// Three stages: plain fit, refit without outlier rows, refit with the quadratic term.
PipelineReport wine_pipeline(const std::string& csv_path, const WineConfig& config);
/// Three stages: linear Poisson, spline Poisson, spline quasi-Poisson.
PipelineReport bike_pipeline(const std::string& csv_path, const BikeConfig& config);
/// Writes report.json and index.html into the output directory; returns the index path.
std::string write_report(const PipelineReport& report, const std::string& output_dir);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace funres
