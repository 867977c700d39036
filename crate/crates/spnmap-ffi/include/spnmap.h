#ifndef SPNMAP_H
#define SPNMAP_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible entry point.
 */
typedef enum SpnStatus {
  SpnStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  SpnStatus_NullArgument = 1,
  /**
   * Input text was not valid UTF-8.
   */
  SpnStatus_InvalidUtf8 = 2,
  /**
   * The SPN or problem text failed to parse or validate.
   */
  SpnStatus_ParseFailed = 3,
  /**
   * An argument was out of range (variable index, value, solver token).
   */
  SpnStatus_InvalidArgument = 4,
} SpnStatus;

/**
 * Opaque sum-product network.
 */
typedef struct SpnHandle SpnHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null.
 * Valid until the next failing call on the same thread.
 */
const char *spn_last_error_message(void);

/**
 * Parse an SPN document into a new handle.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be a valid pointer.
 */
enum SpnStatus spn_parse(const char *text, struct SpnHandle **out);

/**
 * Release a handle. Null is allowed.
 *
 * # Safety
 * `handle` must have come from this library and not be freed twice.
 */
void spn_free(struct SpnHandle *handle);

/**
 * # Safety
 * `handle` must be a live handle from this library.
 */
uintptr_t spn_num_vars(const struct SpnHandle *handle);

/**
 * # Safety
 * `handle` must be a live handle from this library.
 */
uintptr_t spn_num_nodes(const struct SpnHandle *handle);

/**
 * # Safety
 * `handle` must be a live handle from this library.
 */
uintptr_t spn_num_arcs(const struct SpnHandle *handle);

/**
 * Evaluate the network. `assignment` holds one entry per variable; a value
 * of -1 marginalizes that variable.
 *
 * # Safety
 * `assignment` must point to `len` readable entries; `out` must be valid.
 */
enum SpnStatus spn_evaluate(const struct SpnHandle *handle,
                            const int32_t *assignment,
                            uintptr_t len,
                            double *out);

/**
 * Serialize the network back to its text format. The returned string must
 * be released with `spn_string_free`.
 *
 * # Safety
 * `handle` must be live; `out` must be valid.
 */
enum SpnStatus spn_serialize(const struct SpnHandle *handle, char **out);

/**
 * Release a string returned by this library. Null is allowed.
 *
 * # Safety
 * `text` must have come from this library and not be freed twice.
 */
void spn_string_free(char *text);

/**
 * Reduce a MAP problem (`q:<list|-> e:<var>=<val>,...|- h:<list|->`) to a
 * MAX problem over the query variables; returns a new handle.
 *
 * # Safety
 * `handle` must be live; `problem` NUL-terminated; `out` valid.
 */
enum SpnStatus spn_reduce(const struct SpnHandle *handle,
                          const char *problem,
                          struct SpnHandle **out);

/**
 * Run a MAX solver. `solver` takes the same tokens as the CLI (`bt`, `ng`,
 * `amap`, `bs<K>`, `kbt<K>`, `mc`, `fc`, `fc+o`, `fc+o+s`). A negative
 * `budget_ms` means no time budget (exact solvers only). On success
 * `out_assignment` receives one value per variable and `out_score` the
 * score of that assignment.
 *
 * # Safety
 * `handle` must be live; `solver` NUL-terminated; `out_assignment` must
 * point to `assignment_len` writable entries; `out_score` must be valid.
 */
enum SpnStatus spn_max(const struct SpnHandle *handle,
                       const char *solver,
                       double budget_ms,
                       int32_t *out_assignment,
                       uintptr_t assignment_len,
                       double *out_score);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SPNMAP_H */
