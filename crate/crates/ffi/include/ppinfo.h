#ifndef PPINFO_H
#define PPINFO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an FFI call.
 */
typedef enum PpStatus {
  PP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PP_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PP_STATUS_INVALID_UTF8 = 2,
  /**
   * The JSON configuration was rejected.
   */
  PP_STATUS_CONFIG = 3,
  /**
   * The computation failed (invalid input or numerical failure).
   */
  PP_STATUS_NUMERICAL = 4,
  /**
   * The caller's output buffer is too small; the needed length is reported.
   */
  PP_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A command name was not recognized.
   */
  PP_STATUS_UNKNOWN_COMMAND = 6,
  /**
   * An output file or stream could not be written.
   */
  PP_STATUS_IO = 7,
  /**
   * Internal panic caught at the boundary.
   */
  PP_STATUS_PANIC = 8,
} PpStatus;

/**
 * A model with its quadrature grid and, if configured, reference measure.
 */
typedef struct PpModel PpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model handle from a JSON configuration (the CLI schema).
 * The handle must be released with [`pp_model_free`].
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum PpStatus pp_model_from_json(const char *config_json, struct PpModel **out);

/**
 * Releases a handle from [`pp_model_from_json`]. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pp_model_free(struct PpModel *model);

/**
 * Dimension of the model's base space.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum PpStatus pp_model_dimension(const struct PpModel *model, size_t *out);

/**
 * Janossy density `p^(n)` at a pattern. The value carries unit
 * `ι^(unit_numer/unit_denom)`.
 *
 * # Safety
 * `coords` must hold `n_points × dimension` values (may be null when
 * `n_points` is 0); the out pointers must be writable.
 */
enum PpStatus pp_janossy(const struct PpModel *model,
                         const double *coords,
                         size_t n_points,
                         double *value,
                         int64_t *unit_numer,
                         int64_t *unit_denom);

/**
 * Unitless density `f = c^n · p^(n)` against the configured reference.
 *
 * # Safety
 * As for [`pp_janossy`].
 */
enum PpStatus pp_pdf(const struct PpModel *model,
                     const double *coords,
                     size_t n_points,
                     double *out);

/**
 * `P(|Φ| = n)`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum PpStatus pp_cardinality_pmf(const struct PpModel *model, size_t n, double *out);

/**
 * Differential entropy against the configured reference.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum PpStatus pp_differential_entropy(const struct PpModel *model, double *out);

/**
 * `KL(P_1 ‖ P_0)`; both models must share a grid. The truncation order is
 * the larger of the two.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum PpStatus pp_kl_divergence(const struct PpModel *model_1,
                               const struct PpModel *model_0,
                               double *out);

/**
 * MAP estimate against the configured reference. Cell indices go to
 * `cells` (capacity `cells_cap`); `n_cells` always receives the count, and
 * `BufferTooSmall` is returned if it exceeds the capacity.
 *
 * # Safety
 * `cells` must hold `cells_cap` values (may be null when `cells_cap` is 0);
 * the out pointers must be writable.
 */
enum PpStatus pp_map_estimate(const struct PpModel *model,
                              size_t *cells,
                              size_t cells_cap,
                              size_t *n_cells,
                              double *score);

/**
 * Runs a CLI command (`entropy`, `kl`, `map`, `c-sweep`, `audit`,
 * `pgfl-check`, `sample`) and returns its JSON output in `*out_json`, to be
 * released with [`pp_string_free`]. `seed` overrides the configured seed
 * when `has_seed` is non-zero.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out_json` must be writable.
 */
enum PpStatus pp_run_command(const char *command,
                             const char *config_json,
                             uint64_t seed,
                             int32_t has_seed,
                             char **out_json);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void pp_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *pp_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPINFO_H */
