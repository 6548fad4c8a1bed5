#ifndef FUNRES_FUNRES_H
#define FUNRES_FUNRES_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FUNRES_API __declspec(dllexport)
#else
#define FUNRES_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every fallible call returns one; on failure funres_last_error()
   holds a message for the calling thread until its next failing call. */
typedef enum funres_status {
  FUNRES_OK = 0,
  FUNRES_E_INVALID_ARGUMENT = 1,
  FUNRES_E_IO = 2,
  FUNRES_E_PARSE = 3,
  FUNRES_E_UNKNOWN_COLUMN = 4,
  FUNRES_E_RANK_DEFICIENT = 5,
  FUNRES_E_SEPARATION = 6,
  FUNRES_E_NOT_CONVERGED = 7,
  FUNRES_E_UNSUPPORTED_FAMILY = 8,
  FUNRES_E_DOMAIN = 9,
  FUNRES_E_EMPTY_INPUT = 10,
  FUNRES_E_UNKNOWN_SCENARIO = 11,
  FUNRES_E_INTERNAL = 100
} funres_status;

typedef struct funres_dataset funres_dataset;
typedef struct funres_model funres_model;
typedef struct funres_residuals funres_residuals;

FUNRES_API const char* funres_version(void);
FUNRES_API const char* funres_status_name(funres_status status);
FUNRES_API const char* funres_last_error(void);
/* Releases strings returned through char** out-parameters. */
FUNRES_API void funres_string_free(char* s);

/* Datasets. */
FUNRES_API funres_status funres_dataset_read_csv(const char* path, const char* outcome, char delimiter,
                                                 funres_dataset** out);
FUNRES_API funres_status funres_dataset_simulate(const char* scenario, size_t n, uint64_t seed, funres_dataset** out);
FUNRES_API funres_status funres_dataset_write_csv(const funres_dataset* data, const char* path);
FUNRES_API size_t funres_dataset_rows(const funres_dataset* data);
FUNRES_API void funres_dataset_free(funres_dataset* data);

/* Models. family: binary-logit | cumulative-link | adjacent-category-logit | poisson |
   quasi-poisson | hurdle-poisson. link (cumulative-link only): logit | probit | cloglog.
   terms like "1 + x + x^2 + x1:x2 + bs(x, 3, 2)"; zero_terms for hurdle-poisson;
   max_category 0 infers J from the data. */
FUNRES_API funres_status funres_fit(const funres_dataset* data, const char* family, const char* link,
                                    const char* terms, const char* zero_terms, int max_category, funres_model** out);
FUNRES_API funres_status funres_model_summary_json(const funres_model* model, char** out);
FUNRES_API void funres_model_free(funres_model* model);

/* Functional residuals (lo, hi) for each row; rows whose observed outcome has
   model probability below 1e-12 are excluded. */
FUNRES_API funres_status funres_residuals_compute(const funres_model* model, const funres_dataset* data,
                                                  funres_residuals** out);
FUNRES_API size_t funres_residuals_count(const funres_residuals* res);
FUNRES_API size_t funres_residuals_excluded(const funres_residuals* res);
FUNRES_API funres_status funres_residuals_interval(const funres_residuals* res, size_t i, double* lo, double* hi,
                                                   size_t* row);
FUNRES_API funres_status funres_residuals_write_csv(const funres_residuals* res, const char* path);
FUNRES_API void funres_residuals_free(funres_residuals* res);

/* Diagnostics. scale: uniform | normal. Either output path may be NULL. */
FUNRES_API funres_status funres_fnfn_sup_dev(const funres_residuals* res, double* out);
FUNRES_API funres_status funres_fnfn_at(const funres_residuals* res, double t, double* out);
FUNRES_API funres_status funres_write_fnfn(const funres_residuals* res, const char* title, const char* svg_path,
                                           const char* csv_path);
/* Heatmap of residual mass against a dataset column with a LOWESS overlay; `data`
   must be the dataset the residuals were computed on. */
FUNRES_API funres_status funres_write_heatmap(const funres_residuals* res, const funres_dataset* data,
                                              const char* covariate, const char* scale, int x_bins, int y_bins,
                                              const char* svg_path, const char* csv_path);
/* LOWESS of point summaries against a column; range_out receives max - min of the fit. */
FUNRES_API funres_status funres_write_lowess(const funres_residuals* res, const funres_dataset* data,
                                             const char* covariate, const char* scale, const char* svg_path,
                                             const char* csv_path, double* range_out);

/* Simulation and verification. */
FUNRES_API funres_status funres_scenario_names_json(char** out);
/* Runs the listed simulation criteria (all when ids is NULL); JSON report in *out. */
FUNRES_API funres_status funres_verify(const int* ids, size_t count, char** out, int* all_pass);

/* Case studies. which: wine | bike. config_json may be NULL for defaults;
   output_dir, when non-NULL, overrides the config's output directory. */
FUNRES_API funres_status funres_casestudy(const char* which, const char* csv_path, const char* config_json,
                                          const char* output_dir, char** report_json, char** index_path);

#ifdef __cplusplus
}
#endif

#endif
