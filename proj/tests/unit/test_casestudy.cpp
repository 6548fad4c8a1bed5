#include "doctest.h"

#include "casestudy/pipeline.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "simulation/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace funres;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("funres_casestudy_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

// Wine-like table: quality 3..9 from an adjacent-category model that includes a
// quadratic free-sulfur effect, plus two gross outlier rows.
std::string synthetic_wine(int n, const std::string& bad_quality = "") {
  RngStream g(77, 1);
  const std::vector<std::string> cols = {"fixed acidity", "volatile acidity", "residual sugar", "free sulfur dioxide",
                                         "density",       "pH",               "sulphates",      "alcohol"};
  std::ostringstream os;
  for (const auto& c : cols) os << '"' << c << "\";";
  os << "\"quality\"\n";
  Eigen::VectorXd alpha(6);
  alpha << -2.5, -1.5, -0.5, 0.5, 1.5, 2.5;
  for (int i = 0; i < n; ++i) {
    std::vector<double> v = {g.normal(6.8, 0.8), g.normal(0.28, 0.1), g.normal(6.4, 5.0), g.normal(35, 17),
                             g.normal(0.994, 0.003), g.normal(3.19, 0.15), g.normal(0.49, 0.11), g.normal(10.5, 1.2)};
    if (i == 5) v[2] = 65.8, v[4] = 1.039;
    if (i == 9) v[0] = 14.2;
    const double fs = v[3];
    const double eta = 3.4 * v[1] - 0.3 * v[7] - 0.05 * (fs - 35) + 0.0008 * (fs - 35) * (fs - 35);
    Eigen::VectorXd p = adjacent_category_probs(alpha, eta);
    const int y = g.categorical(std::span<const double>(p.data(), 7));
    for (double d : v) os << d << ';';
    os << (i == 3 && !bad_quality.empty() ? bad_quality : std::to_string(y + 3)) << '\n';
  }
  return os.str();
}

// Hourly counts with a cyclic hour effect and gamma-mixed Poisson noise.
std::string synthetic_bike(int n, bool raw_format) {
  RngStream g(88, 2);
  std::ostringstream os;
  if (raw_format)
    os << "instant,dteday,season,yr,mnth,hr,holiday,weekday,workingday,weathersit,temp,atemp,hum,windspeed,casual,registered,cnt\n";
  else
    os << "count,hour,temp,humidity,windspeed,winter,workingday,weather\n";
  for (int i = 0; i < n; ++i) {
    const int hr = i % 24, season = 1 + (i / 100) % 4, yr = raw_format ? (i % 5 == 0 ? 0 : 1) : 1;
    const double temp = g.uniform(), hum = g.uniform(), wind = 0.4 * g.uniform();
    const int work = g.bernoulli(0.7), weather = 1 + g.categorical(std::vector<double>{0.6, 0.3, 0.1});
    const double winter = season == 4 ? 1.0 : 0.0;
    const double mu = std::exp(3.5 + 1.2 * std::sin(hr / 24.0 * 2 * M_PI) + 0.8 * temp - 0.7 * hum * hum -
                               0.3 * winter + 0.06 * work - 0.1 * weather);
    const std::vector<double> m{mu};
    const int y = gen_overdispersed(m, 1.0 / 9.0, g)[0];
    if (raw_format)
      os << i + 1 << ",2012-01-01," << season << ',' << yr << ",1," << hr << ",0,1," << work << ',' << weather << ','
         << temp << ',' << temp << ',' << hum << ',' << wind << ",0," << y << ',' << y << '\n';
    else
      os << y << ',' << hr << ',' << temp << ',' << hum << ',' << wind << ',' << winter << ',' << work << ','
         << weather << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto w = parse_wine_config(R"({"output_dir": "out", "outliers": [{"column": "pH", "op": "<", "value": 2.8}],
                                       "plots": {"scale": "uniform", "x_bins": 10}})");
  CHECK(w.output_dir == "out");
  REQUIRE(w.outliers.size() == 1);
  CHECK(w.outliers[0].matches(2.7));
  CHECK_FALSE(w.outliers[0].matches(2.8));
  CHECK(w.plots.scale == Scale::Uniform);
  CHECK(w.plots.x_bins == 10);
  CHECK(w.predictors.size() == 8);
  CHECK(parse_wine_config(to_json(w)).outliers[0].describe() == w.outliers[0].describe());

  const auto b = parse_bike_config(R"({"hour_df": 12})");
  CHECK(b.hour_df == 12);
  CHECK(b.smooth_df == 5);
  CHECK(parse_bike_config(to_json(b)).hour_df == 12);

  CHECK(code_of([] { parse_wine_config("{"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_wine_config(R"({"bogus": 1})"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_wine_config(R"({"outliers": [{"column": "pH", "op": "!=", "value": 1}]})"); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_bike_config(R"({"hour_df": 3})"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_bike_config(R"({"plots": {"scale": "log"}})"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("wine pipeline on a synthetic table") {
  const auto dir = scratch("wine");
  spit(dir / "wine.csv", synthetic_wine(1500));
  WineConfig cfg;
  cfg.output_dir = (dir / "out").string();
  cfg.plots.x_bins = cfg.plots.y_bins = 20;
  const auto rep = wine_pipeline((dir / "wine.csv").string(), cfg);
  CHECK(rep.rows_read == 1500);
  CHECK(rep.rows_removed == 2);
  REQUIRE(rep.cleaning.size() == 3);
  CHECK(rep.cleaning[0].rows == std::vector<std::size_t>{10});
  CHECK(rep.cleaning[1].rows == std::vector<std::size_t>{6});
  CHECK(rep.cleaning[2].rows == std::vector<std::size_t>{6});
  REQUIRE(rep.stages.size() == 3);
  CHECK(rep.stages[0].model.converged);
  CHECK(rep.stages[1].nobs == 1498);
  CHECK(rep.stages[2].aic < rep.stages[1].aic - 10);
  CHECK(rep.stages[2].lowess_range.at("free.sulfur.dioxide") < rep.stages[1].lowess_range.at("free.sulfur.dioxide"));
  CHECK(rep.stages[0].model.beta(0) > 0);
  CHECK(rep.stages[0].model.beta(1) < 0);

  const auto index = write_report(rep, cfg.output_dir);
  const auto html = slurp(index);
  for (const auto& s : rep.stages)
    for (const auto& a : s.artifacts) {
      CHECK(fs::exists(dir / "out" / a.data));
      if (!a.svg.empty()) {
        CHECK(fs::exists(dir / "out" / a.svg));
        CHECK(html.find(a.svg) != std::string::npos);
      }
    }
  CHECK(slurp(dir / "out" / "report.json").find("\"sign_convention\"") != std::string::npos);

  const auto first = slurp(dir / "out" / "stage3_heatmap_free.sulfur.dioxide.svg");
  const auto json1 = slurp(dir / "out" / "report.json");
  write_report(wine_pipeline((dir / "wine.csv").string(), cfg), cfg.output_dir);
  CHECK(slurp(dir / "out" / "stage3_heatmap_free.sulfur.dioxide.svg") == first);
  CHECK(slurp(dir / "out" / "report.json") == json1);
}

TEST_CASE("wine input errors") {
  const auto dir = scratch("wine_err");
  spit(dir / "bad.csv", synthetic_wine(50, "10"));
  WineConfig cfg;
  cfg.output_dir = (dir / "out").string();
  CHECK(code_of([&] { wine_pipeline((dir / "bad.csv").string(), cfg); }) == ErrorCode::Domain);
  cfg.predictors.push_back("citric.acid");
  spit(dir / "ok.csv", synthetic_wine(50));
  CHECK(code_of([&] { load_wine((dir / "ok.csv").string(), cfg); }) == ErrorCode::UnknownColumn);
  CHECK(code_of([&] { wine_pipeline((dir / "missing.csv").string(), cfg); }) == ErrorCode::Io);
}

TEST_CASE("bike ingestion formats") {
  const auto dir = scratch("bike_load");
  spit(dir / "hour.csv", synthetic_bike(500, true));
  BikeConfig cfg;
  const Dataset d = load_bike((dir / "hour.csv").string(), cfg);
  CHECK(d.rows() == 400);
  CHECK(d.names() == std::vector<std::string>{"hour", "temp", "humidity", "windspeed", "winter", "workingday", "weather"});
  const auto w = d.column("winter");
  CHECK(w.maxCoeff() == 1.0);
  CHECK(w.minCoeff() == 0.0);
  cfg.year = 0;
  CHECK(load_bike((dir / "hour.csv").string(), cfg).rows() == 100);
  spit(dir / "short.csv", "count,hour\n1,2\n");
  CHECK(code_of([&] { load_bike((dir / "short.csv").string(), cfg); }) == ErrorCode::UnknownColumn);
}

TEST_CASE("bike pipeline stages improve the Fn-Fn fit") {
  const auto dir = scratch("bike");
  spit(dir / "bike.csv", synthetic_bike(3000, false));
  BikeConfig cfg;
  cfg.output_dir = (dir / "out").string();
  cfg.plots.x_bins = cfg.plots.y_bins = 24;
  const auto rep = bike_pipeline((dir / "bike.csv").string(), cfg);
  REQUIRE(rep.stages.size() == 3);
  CHECK(rep.stages[0].spec.family == Family::Poisson);
  CHECK(rep.stages[2].spec.family == Family::QuasiPoisson);
  CHECK(rep.stages[1].model.beta.size() == 1 + 10 + 3 * 5 + 3);
  CHECK(rep.stages[2].dispersion > 5);
  CHECK(rep.stages[0].sup_dev > rep.stages[1].sup_dev);
  CHECK(rep.stages[1].sup_dev > rep.stages[2].sup_dev);
  CHECK(rep.stages[0].lowess_range.size() == 4);
  CHECK(fs::exists(write_report(rep, cfg.output_dir)));
}
