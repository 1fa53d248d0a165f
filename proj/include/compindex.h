/* compindex — hierarchical composite-indicator construction and audit engine.
 *
 * C interface of the shared library. All functions return ci_status; on
 * failure ci_last_error() holds a thread-local message describing the cause.
 * Handles are opaque and must be released with their matching close call.
 */
#ifndef COMPINDEX_H
#define COMPINDEX_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CI_API __declspec(dllexport)
#else
#define CI_API __attribute__((visibility("default")))
#endif

typedef enum ci_status {
    CI_OK = 0,
    CI_ERROR = 1,         /* unexpected failure */
    CI_ERROR_CONFIG = 2,  /* malformed or inconsistent configuration */
    CI_ERROR_DATA = 3,    /* invalid input data or broken invariant */
    CI_ERROR_NUMERIC = 4  /* degenerate numerics or non-convergence */
} ci_status;

CI_API const char* ci_version(void);

/* Message for the most recent failing call on this thread; never NULL. */
CI_API const char* ci_last_error(void);

/* ---- dataset handle ---------------------------------------------------- */

typedef struct ci_dataset ci_dataset;

/* Loads and cross-validates the long-format data CSV, the hierarchy JSON
 * and the population CSV. */
CI_API ci_status ci_dataset_open(const char* data_csv, const char* hierarchy_json,
                                 const char* population_csv, ci_dataset** out);
CI_API void ci_dataset_close(ci_dataset* dataset);

CI_API int ci_dataset_units(const ci_dataset* dataset);
CI_API int ci_dataset_indicators(const ci_dataset* dataset);
CI_API int ci_dataset_years(const ci_dataset* dataset);
CI_API int ci_dataset_missing_cells(const ci_dataset* dataset);

/* ---- in-memory pipeline evaluation ------------------------------------- */

typedef struct ci_result ci_result;

/* Runs one method-space configuration end to end. method_json may be "{}"
 * or select {"winsor_level": 2|5|10, "normalization": "weighted-zscore"|
 * "minmax", "indicator_weights": "equal"|"pca", "domain_weights":
 * "equal"|"optimized"}; options default to the first level of each factor.
 * Optional top-level fields: "baseline_year", "analysis_year", "seed". */
CI_API ci_status ci_run_pipeline(ci_dataset* dataset, const char* method_json,
                                 ci_result** out);
CI_API void ci_result_close(ci_result* result);

CI_API int ci_result_units(const ci_result* result);
CI_API const char* ci_result_unit(const ci_result* result, int index);
CI_API double ci_result_value(const ci_result* result, int index); /* normalized scale */
CI_API int ci_result_rank(const ci_result* result, int index);     /* 1 = lowest value */

/* ---- stage commands (file to file) ------------------------------------- */

CI_API ci_status ci_impute(const char* data_csv, const char* hierarchy_json,
                           const char* out_csv, const char* report_json);

/* mode: "ons" | "modified"; winsor_kmax <= 0 selects max(2, ceil(2% of n)). */
CI_API ci_status ci_treat(const char* data_csv, const char* mode, int winsor_kmax,
                          const char* out_csv, const char* plan_json);

/* method: "zscore" | "minmax". hierarchy_json may be NULL: indicators are
 * then taken as already health-directed (polarity 0). */
CI_API ci_status ci_normalize(const char* data_csv, const char* population_csv,
                              const char* hierarchy_json, const char* method,
                              int baseline_year, const char* out_csv,
                              const char* params_json);

/* method: "equal" | "fa" | "pca" | "optimized". year <= 0 selects the first
 * year (pca reference year / optimized analysis year). estimator may be NULL
 * ("linear"). */
CI_API ci_status ci_weights(const char* z_csv, const char* hierarchy_json, const char* method,
                            int year, const char* estimator, const char* out_json);

/* levels/geo: comma-separated subsets of indicator,subdomain,domain,overall
 * and utla,region,nation; NULL or "" selects everything. normalization
 * ("zscore"|"minmax", NULL = zscore) controls the presentation column.
 * geometric != 0 switches the hierarchical steps to weighted geometric
 * means (experimental; requires strictly positive scores). */
CI_API ci_status ci_aggregate(const char* z_csv, const char* weights_json,
                              const char* hierarchy_json, const char* population_csv,
                              const char* levels, const char* geo, int renormalize_regions,
                              int geometric, const char* normalization, const char* out_csv);

/* kind: "corr" | "sa" | "ua" | "rankshift". options_json fields (all
 * optional): level, mode ("exact"|"mc"), iterations, seed, bootstrap,
 * output_level ("overall"|"domain:<name>"), baseline_year, analysis_year,
 * estimator, rank_shift_level, reference_config. aux_out receives the flag
 * JSON for corr and the per-unit CSV for sa; it may be NULL. */
CI_API ci_status ci_analyze(const char* kind, const char* data_csv, const char* hierarchy_json,
                            const char* population_csv, const char* options_json,
                            const char* out_path, const char* aux_out);

/* Full pipeline + audit per a run-config JSON file; writes stage artifacts
 * and a manifest with input/output checksums into out_dir. */
CI_API ci_status ci_run(const char* config_json, const char* out_dir);

/* Per-unit rank and index comparison of two run directories; writes
 * out_csv plus <out_csv>.summary.json with the shift bands. */
CI_API ci_status ci_compare(const char* run_a, const char* run_b, const char* out_csv);

/* kind: "corr-heatmap" | "rank-bands" | "sobol-bars" | "rank-shift-bars". */
CI_API ci_status ci_plot(const char* kind, const char* in_csv, const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif /* COMPINDEX_H */
