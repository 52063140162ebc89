#ifndef ROBUST_FUSION_H
#define ROBUST_FUSION_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point. On any nonzero
 * status, `rf_last_error` carries a human-readable message.
 */
typedef enum RfStatus {
  RF_STATUS_OK = 0,
  RF_STATUS_NULL_ARGUMENT = 1,
  RF_STATUS_INVALID_UTF8 = 2,
  RF_STATUS_PARSE_ERROR = 3,
  RF_STATUS_VALIDATION_ERROR = 4,
  RF_STATUS_TOO_LARGE = 5,
  RF_STATUS_NUMERICAL_ERROR = 6,
  RF_STATUS_INDEX_OUT_OF_RANGE = 7,
} RfStatus;

/**
 * An opaque, immutable problem instance: a decision problem plus its
 * information sources. Create with `rf_instance_parse_json`, release with
 * `rf_instance_free`.
 */
typedef struct RfInstance RfInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rf_last_error(void);

/**
 * Parses an instance JSON document (same schema as the CLI instance files)
 * into a fresh handle stored in `*out`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated C string and `out` a valid pointer.
 */
enum RfStatus rf_instance_parse_json(const char *json, struct RfInstance **out);

/**
 * Releases a handle created by `rf_instance_parse_json`. Passing NULL is a
 * no-op.
 *
 * # Safety
 * `instance` must be NULL or a pointer previously returned by
 * `rf_instance_parse_json` that has not been freed yet.
 */
void rf_instance_free(struct RfInstance *instance);

/**
 * Number of information sources in the instance.
 *
 * # Safety
 * `instance` must be a live handle.
 */
uintptr_t rf_source_count(const struct RfInstance *instance);

/**
 * Worst-case (maxmin) value over all couplings of the sources.
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum RfStatus rf_robust_value(const struct RfInstance *instance, double *out);

/**
 * Classical Bayes value of the single source `index`.
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum RfStatus rf_bayes_value(const struct RfInstance *instance, uintptr_t index, double *out);

/**
 * Index and value of the best single source (ties to the lowest index).
 *
 * # Safety
 * `instance` must be a live handle; `out_index` and `out_value` valid.
 */
enum RfStatus rf_best_single_source(const struct RfInstance *instance,
                                    uintptr_t *out_index,
                                    double *out_value);

/**
 * Robustly optimal strategy as a JSON document (value, certificate, and
 * the per-signal action distributions). The string must be released with
 * `rf_string_free`.
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum RfStatus rf_robust_strategy_json(const struct RfInstance *instance, char **out);

/**
 * Releases a string returned by this library. Passing NULL is a no-op.
 *
 * # Safety
 * `s` must be NULL or a pointer returned by an `rf_*` function.
 */
void rf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUST_FUSION_H */
