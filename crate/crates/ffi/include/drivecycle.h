#ifndef DRIVECYCLE_H
#define DRIVECYCLE_H

/* Generated by cbindgen from drivecycle-ffi; do not edit by hand. */

#include <stdint.h>
#include <stddef.h>

/**
 * Outcome of a call. Anything but `DC_OK` leaves a message for
 * [`dc_last_error`].
 */
typedef enum DcStatus {
  DC_OK = 0,
  DC_ERR_PIPELINE = 1,
  DC_ERR_IO = 2,
  DC_ERR_ARG = 3,
} DcStatus;

/**
 * An owned pipeline: configuration plus the results of its last run.
 */
typedef struct DcPipeline DcPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message from the most recent failing call on this thread. The
 * pointer stays valid until the next library call on the same thread.
 */
const char *dc_last_error(void);

/**
 * New pipeline with the default configuration. Free with
 * [`dc_pipeline_free`].
 */
struct DcPipeline *dc_pipeline_new(void);

/**
 * New pipeline from a JSON configuration string. Returns null on a
 * bad configuration and leaves the reason in [`dc_last_error`].
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string or null.
 */
struct DcPipeline *dc_pipeline_new_json(const char *config_json);

/**
 * Free a pipeline. Null is tolerated.
 *
 * # Safety
 * `p` must be a pointer from `dc_pipeline_new*`, not yet freed.
 */
void dc_pipeline_free(struct DcPipeline *p);

/**
 * # Safety
 * `p` must be a live pipeline handle.
 */
enum DcStatus dc_pipeline_set_seed(struct DcPipeline *p, uint64_t seed);

/**
 * Select the clustering method: "mean-shift" or "kmeans".
 *
 * # Safety
 * `p` must be a live pipeline handle; `method` a valid string.
 */
enum DcStatus dc_pipeline_set_method(struct DcPipeline *p, const char *method);

/**
 * Run the full pipeline over `n_inputs` CSV trace files, writing
 * artifacts into `out_dir`. On success the handle holds the summary
 * and the assembled cycle.
 *
 * # Safety
 * `p` must be a live handle; `inputs` must point to `n_inputs` valid
 * strings; `out_dir` must be a valid string.
 */
enum DcStatus dc_pipeline_run(struct DcPipeline *p,
                              const char *const *inputs,
                              size_t n_inputs,
                              const char *out_dir);

/**
 * Seconds in the assembled cycle, or 0 before a successful run.
 *
 * # Safety
 * `p` must be a live pipeline handle.
 */
size_t dc_pipeline_cycle_len(const struct DcPipeline *p);

/**
 * Copy the cycle's speed samples (km/h, one per second) into `buf`.
 * `cap` must be at least [`dc_pipeline_cycle_len`].
 *
 * # Safety
 * `p` must be a live handle; `buf` must have room for `cap` doubles.
 */
enum DcStatus dc_pipeline_cycle_speeds(const struct DcPipeline *p, double *buf, size_t cap);

/**
 * Last run's summary as a JSON string, or null before a successful
 * run. Free the result with [`dc_string_free`].
 *
 * # Safety
 * `p` must be a live pipeline handle.
 */
char *dc_pipeline_summary_json(const struct DcPipeline *p);

/**
 * Free a string returned by this library. Null is tolerated.
 *
 * # Safety
 * `s` must have come from this library and not be freed twice.
 */
void dc_string_free(char *s);

/**
 * Generate the synthetic benchmark corpus into `out_dir`. Pass null
 * for the default generator configuration, or a JSON string.
 *
 * # Safety
 * `out_dir` must be a valid string; `config_json` a valid string or
 * null.
 */
enum DcStatus dc_synth_gen(const char *out_dir, const char *config_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRIVECYCLE_H */
