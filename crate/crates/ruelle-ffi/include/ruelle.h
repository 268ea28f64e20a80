#ifndef RUELLE_H
#define RUELLE_H

/* Generated from the ruelle-ffi crate by its build script; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Anything but OK leaves a message readable through
 * `ruelle_last_error`.
 */
typedef enum RuelleStatus {
  RUELLE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  RUELLE_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  RUELLE_STATUS_UTF8 = 2,
  /**
   * The arguments describe something the library refuses: unknown
   * potential name, symbol out of range, nonpositive tolerance, a
   * potential incompatible with the space, and so on.
   */
  RUELLE_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Exact enumeration would exceed the term cap and sampling was not
   * requested.
   */
  RUELLE_STATUS_CAP_EXCEEDED = 4,
  /**
   * A caller-supplied buffer is shorter than the data it must receive.
   */
  RUELLE_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A panic was caught at the boundary. The process is intact but the
   * call did nothing.
   */
  RUELLE_STATUS_PANIC = 6,
} RuelleStatus;

/**
 * Branch weighting of the operator sums.
 */
typedef enum RuelleWeighting {
  /**
   * Weight each preimage branch by the alphabet weights.
   */
  RUELLE_WEIGHTING_PROBABILITY = 0,
  /**
   * Plain sums over preimages.
   */
  RUELLE_WEIGHTING_COUNTING = 1,
} RuelleWeighting;

/**
 * Opaque handle: a potential, reusable across calls on the space it was
 * built against.
 */
typedef struct RuellePotential RuellePotential;

/**
 * Opaque handle: Perron eigendata of a finite-memory transfer matrix.
 */
typedef struct RuelleRpf RuelleRpf;

/**
 * Opaque handle: finite alphabet with branch weights.
 */
typedef struct RuelleSpace RuelleSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string. Never freed.
 */
const char *ruelle_version(void);

/**
 * Message for the most recent failing call on this thread, empty when
 * nothing failed yet. The pointer stays valid until the next failing
 * call on the same thread; copy it out if it must outlive that.
 */
const char *ruelle_last_error(void);

/**
 * Builds a finite alphabet. `labels` holds `n_labels` nul-terminated
 * strings; numeric labels (like "-1") denote their own coordinate value.
 * `weights` is either null (uniform) or `n_labels` strictly positive
 * entries, normalized internally.
 *
 * # Safety
 * `labels` must point to `n_labels` valid C strings, `weights` to
 * `n_labels` doubles when non-null, and `out` must be writable. The
 * returned handle is released with `ruelle_space_free`.
 */
enum RuelleStatus ruelle_space_new_finite(const char *const *labels,
                                          size_t n_labels,
                                          const double *weights,
                                          struct RuelleSpace **out);

/**
 * Number of symbols in the alphabet.
 *
 * # Safety
 * `space` must be a live handle from `ruelle_space_new_finite` and `out`
 * writable.
 */
enum RuelleStatus ruelle_space_symbol_count(const struct RuelleSpace *space, size_t *out);

/**
 * Releases a space handle. Null is a no-op.
 *
 * # Safety
 * `space` must be null or a handle not freed before.
 */
void ruelle_space_free(struct RuelleSpace *space);

/**
 * Builds a potential by registry name ("constant", "single_site",
 * "ising", "finite_range", "long_range", "double_hofbauer"). Scalar
 * parameters arrive as parallel `param_names` / `param_values` arrays;
 * `finite_range` additionally takes its coefficient `table`
 * (lexicographic over the window), which must be null for every other
 * name. The potential is validated against `space` before it is handed
 * out.
 *
 * # Safety
 * `name` and the `n_params` entries of `param_names` must be valid C
 * strings, `param_values` must hold `n_params` doubles, `table` must be
 * null or hold `table_len` doubles, and `out` must be writable. The
 * returned handle is released with `ruelle_potential_free`.
 */
enum RuelleStatus ruelle_potential_new(const struct RuelleSpace *space,
                                       const char *name,
                                       const char *const *param_names,
                                       const double *param_values,
                                       size_t n_params,
                                       const double *table,
                                       size_t table_len,
                                       struct RuellePotential **out);

/**
 * Releases a potential handle. Null is a no-op.
 *
 * # Safety
 * `potential` must be null or a handle not freed before.
 */
void ruelle_potential_free(struct RuellePotential *potential);

/**
 * Finite-depth pressure estimates `p_n` for n = 1..=n_max at the base
 * point written as `base_prefix` followed by the constant symbol
 * `base_pad`. The operator uses the potential truncated to memory `m + 1`
 * with tail symbol `trunc_pad`. `entries` receives `n_max` values (its
 * capacity `entries_len` must be at least `n_max`); `final_estimate` may
 * be null when only the trace is wanted.
 *
 * # Safety
 * Handles must be live, `base_prefix` must hold `prefix_len` entries,
 * and `entries` must have room for `entries_len` doubles.
 */
enum RuelleStatus ruelle_pressure_trace(const struct RuelleSpace *space,
                                        const struct RuellePotential *potential,
                                        enum RuelleWeighting weighting,
                                        const size_t *base_prefix,
                                        size_t prefix_len,
                                        size_t base_pad,
                                        size_t n_max,
                                        size_t m,
                                        size_t trunc_pad,
                                        double *entries,
                                        size_t entries_len,
                                        double *final_estimate);

/**
 * Solves for the Perron eigendata of the transfer matrix. With `m` = 0
 * the potential must already have finite memory; with `m` > 0 it is
 * first truncated to memory `m` with tail symbol `trunc_pad`. Tolerance
 * must be positive; `max_iter` caps the power iteration. Non-convergence
 * is not an error: the handle carries a flag for it.
 *
 * # Safety
 * Handles must be live and `out` writable. The returned handle is
 * released with `ruelle_rpf_free`.
 */
enum RuelleStatus ruelle_rpf_solve(const struct RuelleSpace *space,
                                   const struct RuellePotential *potential,
                                   enum RuelleWeighting weighting,
                                   size_t m,
                                   size_t trunc_pad,
                                   double tol,
                                   size_t max_iter,
                                   struct RuelleRpf **out);

/**
 * Perron eigenvalue.
 *
 * # Safety
 * `rpf` must be a live handle and `out` writable.
 */
enum RuelleStatus ruelle_rpf_lambda(const struct RuelleRpf *rpf, double *out);

/**
 * log of the Perron eigenvalue (the finite-memory pressure).
 *
 * # Safety
 * `rpf` must be a live handle and `out` writable.
 */
enum RuelleStatus ruelle_rpf_log_lambda(const struct RuelleRpf *rpf, double *out);

/**
 * Whether the power iteration met its tolerance within `max_iter`.
 *
 * # Safety
 * `rpf` must be a live handle and `out` writable.
 */
enum RuelleStatus ruelle_rpf_converged(const struct RuelleRpf *rpf, bool *out);

/**
 * Number of grid words the eigenvectors live on (alphabet size to the
 * power of the effective memory).
 *
 * # Safety
 * `rpf` must be a live handle and `out` writable.
 */
enum RuelleStatus ruelle_rpf_grid_len(const struct RuelleRpf *rpf, size_t *out);

/**
 * Copies the right eigenfunction h over the grid words in lexicographic
 * order, normalized so that sum(nu * h) = 1.
 *
 * # Safety
 * `rpf` must be a live handle and `buf` must have room for `len`
 * doubles; `len` must be at least the grid length.
 */
enum RuelleStatus ruelle_rpf_copy_h(const struct RuelleRpf *rpf, double *buf, size_t len);

/**
 * Copies the left eigenvector nu (a probability vector over the grid
 * words in lexicographic order).
 *
 * # Safety
 * `rpf` must be a live handle and `buf` must have room for `len`
 * doubles; `len` must be at least the grid length.
 */
enum RuelleStatus ruelle_rpf_copy_nu(const struct RuelleRpf *rpf, double *buf, size_t len);

/**
 * Releases an eigendata handle. Null is a no-op.
 *
 * # Safety
 * `rpf` must be null or a handle not freed before.
 */
void ruelle_rpf_free(struct RuelleRpf *rpf);

/**
 * Conditional-expectation kernel `K_n` of a cylinder indicator at the
 * boundary written as `prefix` then the constant symbol `pad`. The
 * indicator fixes `symbols[i]` at coordinate `coords[i]` (1-based,
 * strictly increasing). `cap` bounds exact enumeration (0 picks the
 * library default); when `use_sampling` is set the value is estimated by
 * seeded stratified sampling with `samples` draws (0 picks the default)
 * and `stderr_out`, when non-null, receives the delta-method standard
 * error (NaN for exact evaluation).
 *
 * # Safety
 * Handles must be live; `coords` and `symbols` must hold `n_constraints`
 * entries, `prefix` must hold `prefix_len` entries, and `value_out` must
 * be writable.
 */
enum RuelleStatus ruelle_kernel_indicator(const struct RuelleSpace *space,
                                          const struct RuellePotential *potential,
                                          enum RuelleWeighting weighting,
                                          size_t n,
                                          const size_t *coords,
                                          const size_t *symbols,
                                          size_t n_constraints,
                                          const size_t *prefix,
                                          size_t prefix_len,
                                          size_t pad,
                                          size_t cap,
                                          bool use_sampling,
                                          uint64_t seed,
                                          size_t samples,
                                          double *value_out,
                                          double *stderr_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUELLE_H */
