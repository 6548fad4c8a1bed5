#include "funres/funres.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace {

struct Failure {
  funres_status status;
};

void check(funres_status s) {
  if (s != FUNRES_OK) {
    std::cerr << "error (" << funres_status_name(s) << "): " << funres_last_error() << '\n';
    throw Failure{s};
  }
}

struct DatasetDeleter {
  void operator()(funres_dataset* p) const { funres_dataset_free(p); }
};
struct ModelDeleter {
  void operator()(funres_model* p) const { funres_model_free(p); }
};
struct ResidualsDeleter {
  void operator()(funres_residuals* p) const { funres_residuals_free(p); }
};
using DatasetPtr = std::unique_ptr<funres_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<funres_model, ModelDeleter>;
using ResidualsPtr = std::unique_ptr<funres_residuals, ResidualsDeleter>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  funres_string_free(s);
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error (io): cannot write " << path << '\n';
    throw Failure{FUNRES_E_IO};
  }
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error (io): cannot open " << path << '\n';
    throw Failure{FUNRES_E_IO};
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct DataArgs {
  std::string path, outcome = "y", delimiter = ",", scenario;
  std::size_t n = 1000;
  std::uint64_t seed = 20240601;

  void add(CLI::App* app) {
    auto* data = app->add_option("--data", path, "input CSV");
    app->add_option("--outcome", outcome, "outcome column")->capture_default_str();
    app->add_option("--delimiter", delimiter, "CSV delimiter")->capture_default_str();
    auto* sc = app->add_option("--scenario", scenario, "simulate the input from a named scenario instead");
    app->add_option("--n", n, "rows to simulate with --scenario")->capture_default_str();
    app->add_option("--seed", seed, "seed for --scenario")->capture_default_str();
    data->excludes(sc);
  }

  DatasetPtr load() const {
    funres_dataset* d = nullptr;
    if (!scenario.empty()) {
      check(funres_dataset_simulate(scenario.c_str(), n, seed, &d));
    } else {
      if (path.empty()) {
        std::cerr << "error (invalid_argument): one of --data or --scenario is required\n";
        throw Failure{FUNRES_E_INVALID_ARGUMENT};
      }
      if (delimiter.size() != 1) {
        std::cerr << "error (invalid_argument): --delimiter must be one character\n";
        throw Failure{FUNRES_E_INVALID_ARGUMENT};
      }
      check(funres_dataset_read_csv(path.c_str(), outcome.c_str(), delimiter[0], &d));
    }
    return DatasetPtr(d);
  }
};

struct ModelArgs {
  std::string family, link, terms, zero_terms;
  int max_category = 0;

  void add(CLI::App* app) {
    app->add_option("--family", family,
                    "binary-logit | cumulative-link | adjacent-category-logit | poisson | quasi-poisson | hurdle-poisson")
        ->required();
    app->add_option("--link", link, "logit | probit | cloglog (cumulative-link)");
    app->add_option("--terms", terms, "model terms, e.g. \"1 + x + x^2\"")->required();
    app->add_option("--zero-terms", zero_terms, "hurdle zero-part terms");
    app->add_option("--max-category", max_category, "largest ordinal category (0 = from data)");
  }

  ModelPtr fit(const funres_dataset* d) const {
    funres_model* m = nullptr;
    check(funres_fit(d, family.c_str(), link.empty() ? nullptr : link.c_str(), terms.c_str(),
                     zero_terms.empty() ? nullptr : zero_terms.c_str(), max_category, &m));
    return ModelPtr(m);
  }
};

ResidualsPtr residuals_of(const funres_model* m, const funres_dataset* d) {
  funres_residuals* r = nullptr;
  check(funres_residuals_compute(m, d, &r));
  return ResidualsPtr(r);
}

std::vector<int> parse_ids(const std::string& list) {
  std::vector<int> ids;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) ids.push_back(std::stoi(item));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional residuals for discrete-outcome regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(funres_version()));

  DataArgs fit_data;
  ModelArgs fit_model;
  std::string fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model and print its JSON summary");
  fit_data.add(fit_cmd);
  fit_model.add(fit_cmd);
  fit_cmd->add_option("--out", fit_out, "write the summary here instead of stdout");

  DataArgs res_data;
  ModelArgs res_model;
  std::string res_out;
  auto* res_cmd = app.add_subcommand("residuals", "write functional residuals as CSV");
  res_data.add(res_cmd);
  res_model.add(res_cmd);
  res_cmd->add_option("--out", res_out, "residual CSV path")->required();

  DataArgs diag_data;
  ModelArgs diag_model;
  std::string diag_dir, diag_scale = "normal";
  std::vector<std::string> diag_covs;
  int diag_bins = 100;
  auto* diag_cmd = app.add_subcommand("diagnose", "write Fn-Fn, heatmap and LOWESS plots with CSV exports");
  diag_data.add(diag_cmd);
  diag_model.add(diag_cmd);
  diag_cmd->add_option("--out-dir", diag_dir, "output directory")->required();
  diag_cmd->add_option("--covariates", diag_covs, "columns to plot against")->delimiter(',');
  diag_cmd->add_option("--scale", diag_scale, "uniform | normal")->capture_default_str();
  diag_cmd->add_option("--bins", diag_bins, "heatmap bins per axis")->capture_default_str();

  std::string sim_scenario, sim_out;
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 20240601;
  bool sim_list = false;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a dataset from a named scenario");
  sim_cmd->add_option("--scenario", sim_scenario, "scenario name");
  sim_cmd->add_option("--n", sim_n, "rows")->capture_default_str();
  sim_cmd->add_option("--seed", sim_seed, "seed")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "output CSV (stdout when absent)");
  sim_cmd->add_flag("--list", sim_list, "list scenarios as JSON");

  std::string ver_ids, ver_out;
  auto* ver_cmd = app.add_subcommand("verify", "run the Monte Carlo property checks and print a JSON report");
  ver_cmd->add_option("--criteria", ver_ids, "comma-separated criterion ids (default: all)");
  ver_cmd->add_option("--out", ver_out, "write the report here instead of stdout");

  std::string cs_which, cs_data, cs_config, cs_dir;
  auto* cs_cmd = app.add_subcommand("casestudy", "run the wine or bike case-study pipeline");
  cs_cmd->add_option("which", cs_which, "wine | bike")->required()->check(CLI::IsMember({"wine", "bike"}));
  cs_cmd->add_option("--data", cs_data, "input CSV")->required();
  cs_cmd->add_option("--config", cs_config, "JSON config file");
  cs_cmd->add_option("--out-dir", cs_dir, "output directory (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      auto d = fit_data.load();
      auto m = fit_model.fit(d.get());
      char* s = nullptr;
      check(funres_model_summary_json(m.get(), &s));
      emit(take_string(s), fit_out);
    } else if (*res_cmd) {
      auto d = res_data.load();
      auto m = res_model.fit(d.get());
      auto r = residuals_of(m.get(), d.get());
      check(funres_residuals_write_csv(r.get(), res_out.c_str()));
      std::cerr << funres_residuals_count(r.get()) << " residuals written to " << res_out << " ("
                << funres_residuals_excluded(r.get()) << " excluded)\n";
    } else if (*diag_cmd) {
      auto d = diag_data.load();
      auto m = diag_model.fit(d.get());
      auto r = residuals_of(m.get(), d.get());
      std::filesystem::create_directories(diag_dir);
      const std::filesystem::path dir(diag_dir);
      char* s = nullptr;
      check(funres_model_summary_json(m.get(), &s));
      emit(take_string(s), (dir / "model.json").string());
      check(funres_residuals_write_csv(r.get(), (dir / "residuals.csv").string().c_str()));
      check(funres_write_fnfn(r.get(), "Fn-Fn", (dir / "fnfn.svg").string().c_str(), (dir / "fnfn.csv").string().c_str()));
      double sup = 0.0;
      check(funres_fnfn_sup_dev(r.get(), &sup));
      nlohmann::json out{{"sup_dev", sup},
                         {"residuals", funres_residuals_count(r.get())},
                         {"excluded", funres_residuals_excluded(r.get())}};
      nlohmann::json ranges = nlohmann::json::object();
      for (const auto& c : diag_covs) {
        check(funres_write_heatmap(r.get(), d.get(), c.c_str(), diag_scale.c_str(), diag_bins, diag_bins,
                                   (dir / ("heatmap_" + c + ".svg")).string().c_str(),
                                   (dir / ("heatmap_" + c + ".csv")).string().c_str()));
        double range = 0.0;
        check(funres_write_lowess(r.get(), d.get(), c.c_str(), diag_scale.c_str(),
                                  (dir / ("lowess_" + c + ".svg")).string().c_str(),
                                  (dir / ("lowess_" + c + ".csv")).string().c_str(), &range));
        ranges[c] = range;
      }
      out["lowess_range"] = ranges;
      out["scale"] = diag_scale;
      emit(out.dump(2), (dir / "diagnostics.json").string());
      std::cout << out.dump(2) << '\n';
    } else if (*sim_cmd) {
      if (sim_list) {
        char* s = nullptr;
        check(funres_scenario_names_json(&s));
        emit(take_string(s), "");
        return 0;
      }
      if (sim_scenario.empty()) {
        std::cerr << "error (invalid_argument): --scenario is required\n";
        return FUNRES_E_INVALID_ARGUMENT;
      }
      funres_dataset* raw = nullptr;
      check(funres_dataset_simulate(sim_scenario.c_str(), sim_n, sim_seed, &raw));
      DatasetPtr d(raw);
      if (sim_out.empty()) {
        const auto tmp = std::filesystem::temp_directory_path() / ("funres_sim_" + std::to_string(::getpid()) + ".csv");
        check(funres_dataset_write_csv(d.get(), tmp.string().c_str()));
        std::cout << slurp(tmp.string());
        std::filesystem::remove(tmp);
      } else {
        check(funres_dataset_write_csv(d.get(), sim_out.c_str()));
      }
    } else if (*ver_cmd) {
      const auto ids = parse_ids(ver_ids);
      char* s = nullptr;
      int pass = 0;
      check(funres_verify(ids.empty() ? nullptr : ids.data(), ids.size(), &s, &pass));
      emit(take_string(s), ver_out);
      return pass ? 0 : 1;
    } else if (*cs_cmd) {
      const std::string config = cs_config.empty() ? std::string() : slurp(cs_config);
      char* report = nullptr;
      char* index = nullptr;
      check(funres_casestudy(cs_which.c_str(), cs_data.c_str(), config.empty() ? nullptr : config.c_str(),
                             cs_dir.empty() ? nullptr : cs_dir.c_str(), &report, &index));
      take_string(report);
      std::cout << take_string(index) << '\n';
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  } catch (const std::invalid_argument&) {
    std::cerr << "error (invalid_argument): malformed number\n";
    return FUNRES_E_INVALID_ARGUMENT;
  }
  return 0;
}
