#include "funres/funres.h"

#include "casestudy/pipeline.hpp"
#include "core/error.hpp"
#include "diagnostics/diagnostics.hpp"
#include "diagnostics/plots.hpp"
#include "simulation/criteria.hpp"
#include "simulation/scenario.hpp"

#include "json.hpp"

#include <cstring>
#include <exception>
#include <new>
#include <string>

struct funres_dataset {
  funres::Dataset data;
};

struct funres_model {
  funres::FittedModel model;
};

struct funres_residuals {
  funres::ResidualSet set;
  std::size_t source_rows = 0;
};

static_assert(FUNRES_E_INVALID_ARGUMENT == static_cast<int>(funres::ErrorCode::InvalidArgument));
static_assert(FUNRES_E_UNKNOWN_SCENARIO == static_cast<int>(funres::ErrorCode::UnknownScenario));

namespace {

thread_local std::string last_error;

funres_status set_error(funres_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
funres_status guard(F&& body) {
  try {
    body();
    return FUNRES_OK;
  } catch (const funres::Error& e) {
    return set_error(static_cast<funres_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FUNRES_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FUNRES_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(FUNRES_E_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) funres::fail(funres::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* funres_version(void) { return "1.0.0"; }

const char* funres_status_name(funres_status status) {
  if (status == FUNRES_OK) return "ok";
  if (status == FUNRES_E_INTERNAL) return "internal";
  if (status >= FUNRES_E_INVALID_ARGUMENT && status <= FUNRES_E_UNKNOWN_SCENARIO)
    return funres::error_code_name(static_cast<funres::ErrorCode>(status));
  return "unknown";
}

const char* funres_last_error(void) { return last_error.c_str(); }

void funres_string_free(char* s) { delete[] s; }

funres_status funres_dataset_read_csv(const char* path, const char* outcome, char delimiter, funres_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(outcome, "outcome");
    need(out, "out");
    funres::CsvOptions o;
    o.outcome = outcome;
    o.delimiter = delimiter ? delimiter : ',';
    *out = new funres_dataset{funres::read_csv(path, o)};
  });
}

funres_status funres_dataset_simulate(const char* scenario, size_t n, uint64_t seed, funres_dataset** out) {
  return guard([&] {
    need(scenario, "scenario");
    need(out, "out");
    *out = new funres_dataset{funres::generate(funres::find_scenario(scenario), n, seed)};
  });
}

funres_status funres_dataset_write_csv(const funres_dataset* data, const char* path) {
  return guard([&] {
    need(data, "data");
    need(path, "path");
    funres::write_text_file(path, funres::dataset_csv(data->data));
  });
}

size_t funres_dataset_rows(const funres_dataset* data) { return data ? data->data.rows() : 0; }

void funres_dataset_free(funres_dataset* data) { delete data; }

funres_status funres_fit(const funres_dataset* data, const char* family, const char* link, const char* terms,
                         const char* zero_terms, int max_category, funres_model** out) {
  return guard([&] {
    need(data, "data");
    need(family, "family");
    need(terms, "terms");
    need(out, "out");
    funres::ModelSpec spec;
    spec.family = funres::parse_family(family);
    if (link && *link) spec.link = funres::parse_link(link);
    spec.terms = funres::parse_terms(terms);
    if (zero_terms && *zero_terms) spec.zero_terms = funres::parse_terms(zero_terms);
    spec.max_category = max_category;
    *out = new funres_model{funres::fit(spec, data->data)};
  });
}

funres_status funres_model_summary_json(const funres_model* model, char** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = dup(model->model.summary_json());
  });
}

void funres_model_free(funres_model* model) { delete model; }

funres_status funres_residuals_compute(const funres_model* model, const funres_dataset* data, funres_residuals** out) {
  return guard([&] {
    need(model, "model");
    need(data, "data");
    need(out, "out");
    *out = new funres_residuals{funres::compute_residuals(model->model, data->data), data->data.rows()};
  });
}

size_t funres_residuals_count(const funres_residuals* res) { return res ? res->set.residuals.size() : 0; }

size_t funres_residuals_excluded(const funres_residuals* res) { return res ? res->set.excluded.size() : 0; }

funres_status funres_residuals_interval(const funres_residuals* res, size_t i, double* lo, double* hi, size_t* row) {
  return guard([&] {
    need(res, "residuals");
    if (i >= res->set.residuals.size()) funres::fail(funres::ErrorCode::InvalidArgument, "residual index out of range");
    const auto& r = res->set.residuals[i];
    if (lo) *lo = r.lo;
    if (hi) *hi = r.hi;
    if (row) *row = r.index;
  });
}

funres_status funres_residuals_write_csv(const funres_residuals* res, const char* path) {
  return guard([&] {
    need(res, "residuals");
    need(path, "path");
    funres::write_residual_csv(path, res->set);
  });
}

void funres_residuals_free(funres_residuals* res) { delete res; }

funres_status funres_fnfn_sup_dev(const funres_residuals* res, double* out) {
  return guard([&] {
    need(res, "residuals");
    need(out, "out");
    *out = funres::fnfn(res->set.residuals).sup_dev;
  });
}

funres_status funres_fnfn_at(const funres_residuals* res, double t, double* out) {
  return guard([&] {
    need(res, "residuals");
    need(out, "out");
    if (!(t >= 0.0 && t <= 1.0)) funres::fail(funres::ErrorCode::InvalidArgument, "t must lie in [0, 1]");
    *out = funres::fnfn(res->set.residuals).at(t);
  });
}

funres_status funres_write_fnfn(const funres_residuals* res, const char* title, const char* svg_path,
                                const char* csv_path) {
  return guard([&] {
    need(res, "residuals");
    const auto curve = funres::fnfn(res->set.residuals);
    if (svg_path) funres::write_text_file(svg_path, funres::fnfn_svg(curve, {title ? title : "Fn-Fn", "t"}));
    if (csv_path) funres::write_text_file(csv_path, funres::fnfn_csv(curve));
  });
}

namespace {

std::vector<double> aligned(const funres_residuals* res, const funres_dataset* data, const char* covariate) {
  need(res, "residuals");
  need(data, "data");
  need(covariate, "covariate");
  if (data->data.rows() != res->source_rows)
    funres::fail(funres::ErrorCode::InvalidArgument, "dataset does not match the residuals");
  return funres::covariate_for(res->set, data->data.column(covariate));
}

}  // namespace

funres_status funres_write_heatmap(const funres_residuals* res, const funres_dataset* data, const char* covariate,
                                   const char* scale, int x_bins, int y_bins, const char* svg_path,
                                   const char* csv_path) {
  return guard([&] {
    const auto x = aligned(res, data, covariate);
    funres::HeatmapOptions o;
    o.scale = funres::parse_scale(scale ? scale : "normal");
    if (x_bins > 0) o.x_bins = x_bins;
    if (y_bins > 0) o.y_bins = y_bins;
    const auto grid = funres::heatmap(res->set.residuals, x, o);
    const auto overlay = funres::residual_lowess(res->set.residuals, x, o.scale);
    if (svg_path)
      funres::write_text_file(svg_path, funres::heatmap_svg(grid, {std::string("residuals vs ") + covariate, covariate},
                                                            &overlay));
    if (csv_path) funres::write_text_file(csv_path, funres::heatmap_csv(grid));
  });
}

funres_status funres_write_lowess(const funres_residuals* res, const funres_dataset* data, const char* covariate,
                                  const char* scale, const char* svg_path, const char* csv_path, double* range_out) {
  return guard([&] {
    const auto x = aligned(res, data, covariate);
    const auto s = funres::parse_scale(scale ? scale : "normal");
    const auto fit = funres::residual_lowess(res->set.residuals, x, s);
    if (svg_path)
      funres::write_text_file(svg_path,
                              funres::lowess_svg(fit, s, {std::string("LOWESS of residuals vs ") + covariate, covariate}));
    if (csv_path) funres::write_text_file(csv_path, funres::lowess_csv(fit));
    if (range_out) *range_out = fit.range();
  });
}

funres_status funres_scenario_names_json(char** out) {
  return guard([&] {
    need(out, "out");
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : funres::scenario_registry()) j.push_back({{"name", s.name}, {"description", s.description}});
    *out = dup(j.dump(2));
  });
}

funres_status funres_verify(const int* ids, size_t count, char** out, int* all_pass) {
  return guard([&] {
    need(out, "out");
    std::vector<int> which = ids ? std::vector<int>(ids, ids + count) : funres::simulation_criteria();
    std::vector<funres::CriterionResult> results;
    bool ok = true;
    for (int id : which) {
      results.push_back(funres::run_criterion(id));
      ok = ok && results.back().pass;
    }
    *out = dup(funres::criteria_report_json(results));
    if (all_pass) *all_pass = ok ? 1 : 0;
  });
}

funres_status funres_casestudy(const char* which, const char* csv_path, const char* config_json,
                               const char* output_dir, char** report_json, char** index_path) {
  return guard([&] {
    need(which, "which");
    need(csv_path, "csv_path");
    const std::string kind = which;
    const std::string config = config_json && *config_json ? config_json : "{}";
    funres::PipelineReport rep;
    std::string dir;
    if (kind == "wine") {
      auto cfg = funres::parse_wine_config(config);
      if (output_dir) cfg.output_dir = output_dir;
      dir = cfg.output_dir;
      rep = funres::wine_pipeline(csv_path, cfg);
    } else if (kind == "bike") {
      auto cfg = funres::parse_bike_config(config);
      if (output_dir) cfg.output_dir = output_dir;
      dir = cfg.output_dir;
      rep = funres::bike_pipeline(csv_path, cfg);
    } else {
      funres::fail(funres::ErrorCode::InvalidArgument, "case study must be 'wine' or 'bike'");
    }
    const std::string index = funres::write_report(rep, dir);
    if (report_json) *report_json = dup(rep.to_json());
    if (index_path) *index_path = dup(index);
  });
}

}  // extern "C"
