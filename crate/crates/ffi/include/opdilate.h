#ifndef OPDILATE_H
#define OPDILATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first four match the command-line exit codes.
 */
typedef enum {
  OPD_STATUS_OK = 0,
  OPD_STATUS_NOT_POSITIVE = 1,
  OPD_STATUS_MALFORMED = 2,
  OPD_STATUS_RESIDUAL_EXCEEDED = 3,
  OPD_STATUS_NULL_POINTER = 4,
  OPD_STATUS_INTERNAL = 5,
} OpdStatus;

/**
 * Parsed instance file.
 */
typedef struct OpdInstance OpdInstance;

/**
 * Result of `check` or `dilate`.
 */
typedef struct OpdResult OpdResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *opd_last_error_message(void);

/**
 * Toolkit version as a static NUL-terminated string.
 */
const char *opd_version(void);

/**
 * Parses an instance file held in memory.
 *
 * # Safety
 * `json` must point to `len` readable bytes and `out` must be writable.
 */
OpdStatus opd_instance_from_json(const char *json, size_t len, OpdInstance **out);

/**
 * # Safety
 * `inst` must come from [`opd_instance_from_json`] and not be freed yet.
 */
void opd_instance_free(OpdInstance *inst);

/**
 * Positivity check. Returns `OPD_STATUS_OK` or `OPD_STATUS_NOT_POSITIVE`
 * and stores the report in `out` in both cases.
 *
 * # Safety
 * `inst` must be a live instance handle and `out` must be writable.
 */
OpdStatus opd_check(const OpdInstance *inst, uint64_t seed, OpdResult **out);

/**
 * Minimal decomposition or dilation. A non-positive `tol` keeps the
 * instance's residual tolerance. On `OPD_STATUS_RESIDUAL_EXCEEDED` the
 * result is still stored in `out`.
 *
 * # Safety
 * `inst` must be a live instance handle and `out` must be writable.
 */
OpdStatus opd_dilate(const OpdInstance *inst, double tol, uint64_t seed, OpdResult **out);

/**
 * Re-verifies a serialized result against `inst`.
 *
 * # Safety
 * `inst` must be a live instance handle; `json` must point to `len` bytes.
 */
OpdStatus opd_verify(const OpdInstance *inst, const char *json, size_t len);

/**
 * # Safety
 * `result` must be a live result handle or null.
 */
bool opd_result_passed(const OpdResult *result);

/**
 * Copies up to `cap` module ranks into `ranks` and returns how many
 * ranks the result has.
 *
 * # Safety
 * `result` must be a live result handle; `ranks` must hold `cap` entries
 * or be null with `cap = 0`.
 */
size_t opd_result_ranks(const OpdResult *result, size_t *ranks, size_t cap);

/**
 * Result file as JSON; release with [`opd_string_free`].
 *
 * # Safety
 * `result` must be a live result handle.
 */
char *opd_result_to_json(const OpdResult *result);

/**
 * # Safety
 * `result` must come from [`opd_check`] or [`opd_dilate`] and not be freed yet.
 */
void opd_result_free(OpdResult *result);

/**
 * # Safety
 * `s` must come from [`opd_result_to_json`] and not be freed yet.
 */
void opd_string_free(char *s);

/**
 * Positive-semidefiniteness of an `n × n` Hermitian matrix given as
 * `2·n·n` interleaved row-major `(re, im)` doubles, with default
 * tolerances. The smallest eigenvalue goes to `min_eig` if not null.
 *
 * # Safety
 * `data` must hold `2·n·n` doubles; `is_psd` must be writable.
 */
OpdStatus opd_psd_check(const double *data, size_t n, bool *is_psd, double *min_eig);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPDILATE_H */
