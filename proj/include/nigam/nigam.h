/* C interface to the noisy-input GAM sea-level engine. */
#ifndef NIGAM_NIGAM_H
#define NIGAM_NIGAM_H

#include <stddef.h>
#include <stdint.h>

#if defined(NIGAM_BUILDING_LIBRARY)
#define NIGAM_API __attribute__((visibility("default")))
#else
#define NIGAM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nigam_status {
    NIGAM_OK = 0,
    NIGAM_ERR_INTERNAL = 1, /* numerical or I/O failure inside the engine */
    NIGAM_ERR_INPUT = 2,    /* invalid data, configuration or files */
    NIGAM_ERR_ARGUMENT = 3  /* null handle or out-of-range argument */
} nigam_status;

typedef struct nigam_config nigam_config;
typedef struct nigam_fit nigam_fit;
typedef struct nigam_cv nigam_cv;

NIGAM_API const char* nigam_version(void);

/* Message of the last failed call on this thread; "" if none. */
NIGAM_API const char* nigam_last_error(void);

/* path NULL or "" gives the defaults. */
NIGAM_API nigam_status nigam_config_load(const char* path, nigam_config** out);
NIGAM_API void nigam_config_free(nigam_config* config);
NIGAM_API nigam_status nigam_config_set_seed(nigam_config* config, uint64_t seed);
NIGAM_API nigam_status nigam_config_set_chains(nigam_config* config, int chains);
NIGAM_API nigam_status nigam_config_set_threads(nigam_config* config, unsigned threads);
NIGAM_API nigam_status nigam_config_set_grid_step(nigam_config* config, double step_yr);
NIGAM_API nigam_status nigam_config_set_iterations(nigam_config* config, int iterations, int burn_in, int thin);
/* Writes the resolved configuration as JSON. */
NIGAM_API nigam_status nigam_config_write(const nigam_config* config, const char* path);

/* Two-stage fit. gauge_csv may be NULL or "". Writes the fit directory. */
NIGAM_API nigam_status nigam_fit_run(const nigam_config* config, const char* proxy_csv, const char* gauge_csv,
                                     const char* out_dir, nigam_fit** out);
/* Reopens a fit directory written by nigam_fit_run. */
NIGAM_API nigam_status nigam_fit_load(const char* fit_dir, nigam_fit** out);
NIGAM_API void nigam_fit_free(nigam_fit* fit);

NIGAM_API size_t nigam_fit_site_count(const nigam_fit* fit);
NIGAM_API size_t nigam_fit_observation_count(const nigam_fit* fit);
NIGAM_API size_t nigam_fit_draw_count(const nigam_fit* fit);
/* Ingest warnings (run fits only). */
NIGAM_API size_t nigam_fit_warning_count(const nigam_fit* fit);
NIGAM_API const char* nigam_fit_warning(const nigam_fit* fit, size_t i);
/* Parameters whose R-hat exceeds the configured threshold (run fits only). */
NIGAM_API size_t nigam_fit_rhat_exceeded_count(const nigam_fit* fit);
NIGAM_API const char* nigam_fit_rhat_exceeded(const nigam_fit* fit, size_t i);
/* Pooled posterior mean of a parameter, e.g. "sigma" or "beta_g[0]". */
NIGAM_API nigam_status nigam_fit_posterior_mean(const nigam_fit* fit, const char* parameter, double* out);

/* step_yr <= 0 uses the fit's configured grid step. */
NIGAM_API nigam_status nigam_decompose(const nigam_fit* fit, double step_yr, const char* out_csv);
NIGAM_API nigam_status nigam_rates(const nigam_fit* fit, double step_yr, const char* out_csv);

/* k-fold cross-validation; folds <= 0 uses the configured count. */
NIGAM_API nigam_status nigam_cv_run(const nigam_config* config, const char* proxy_csv, const char* gauge_csv,
                                    int folds, const char* out_dir, nigam_cv** out);
NIGAM_API void nigam_cv_free(nigam_cv* cv);
NIGAM_API size_t nigam_cv_heldout_count(const nigam_cv* cv);
NIGAM_API double nigam_cv_coverage95(const nigam_cv* cv);
NIGAM_API double nigam_cv_coverage50(const nigam_cv* cv);
NIGAM_API double nigam_cv_rmse(const nigam_cv* cv);

/* Synthetic dataset with the default truth. */
NIGAM_API nigam_status nigam_simulate(uint64_t seed, int n_sites, int n_per_site, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
