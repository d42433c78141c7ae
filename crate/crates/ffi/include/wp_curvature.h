#ifndef WP_CURVATURE_H
#define WP_CURVATURE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WpcStatus {
  WPC_STATUS_OK = 0,
  WPC_STATUS_NULL_POINTER = 1,
  WPC_STATUS_INVALID_ARGUMENT = 2,
  WPC_STATUS_CONFIG = 3,
  WPC_STATUS_NUMERICAL = 4,
  WPC_STATUS_IO = 5,
  WPC_STATUS_BUFFER_TOO_SMALL = 6,
  WPC_STATUS_NOT_AVAILABLE = 7,
  WPC_STATUS_PANIC = 8,
} WpcStatus;

/**
 * Run configuration handle.
 */
typedef struct WpcConfig WpcConfig;

/**
 * Completed run handle.
 */
typedef struct WpcRun WpcRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *wpc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wpc_version(void);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with [`wpc_config_free`].
 */
enum WpcStatus wpc_config_new(struct WpcConfig **out);

/**
 * Configuration parsed from TOML text; unknown keys are rejected.
 *
 * # Safety
 * `toml` must be NUL-terminated UTF-8 and `out` a valid pointer.
 */
enum WpcStatus wpc_config_from_toml(const char *toml, struct WpcConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not be used afterwards. Null is ignored.
 */
void wpc_config_free(struct WpcConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum WpcStatus wpc_config_set_mesh_level(struct WpcConfig *cfg, uint32_t level);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum WpcStatus wpc_config_set_tau_rel(struct WpcConfig *cfg, double tau_rel);

/**
 * Last stage to run, by name (`"spectrum"`, `"checks"`, ...). Null clears the limit.
 *
 * # Safety
 * `cfg` must be a live handle; `stage` null or NUL-terminated.
 */
enum WpcStatus wpc_config_set_stage(struct WpcConfig *cfg, const char *stage);

/**
 * Runs the pipeline in memory; no files are written.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer; release the run with [`wpc_run_free`].
 */
enum WpcStatus wpc_run(const struct WpcConfig *cfg, struct WpcRun **out);

/**
 * # Safety
 * `run` must come from [`wpc_run`] and not be used afterwards. Null is ignored.
 */
void wpc_run_free(struct WpcRun *run);

/**
 * 1 when no report entry failed, 0 otherwise.
 *
 * # Safety
 * `run` must be a live handle and `passed` a valid pointer.
 */
enum WpcStatus wpc_run_all_passed(const struct WpcRun *run, int32_t *passed);

/**
 * Copies the ascending spectrum of the curvature operator.
 *
 * `len` receives the eigenvalue count. With a null `values` only the count is written;
 * otherwise `capacity` must cover it.
 *
 * # Safety
 * `run` live, `len` valid, `values` null or writable for `capacity` doubles.
 */
enum WpcStatus wpc_run_spectrum(const struct WpcRun *run,
                                double *values,
                                size_t capacity,
                                size_t *len);

/**
 * Verification report as JSON. Release with [`wpc_string_free`].
 *
 * # Safety
 * `run` live and `out` valid.
 */
enum WpcStatus wpc_run_report_json(const struct WpcRun *run, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is ignored.
 */
void wpc_string_free(char *s);

/**
 * Synthetic-kernel suite over seeds `0..seeds` at dimension `n`; `passed` is 1 when every seed passes.
 *
 * # Safety
 * `passed` must be a valid pointer.
 */
enum WpcStatus wpc_surrogate_suite(uint64_t seeds,
                                   size_t n,
                                   size_t num_points,
                                   double tau_rel,
                                   int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WP_CURVATURE_H */
