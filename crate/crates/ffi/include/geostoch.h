#ifndef GEOSTOCH_H
#define GEOSTOCH_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_UNSUPPORTED = 3,
  GS_STATUS_CUT_LOCUS = 4,
  GS_STATUS_BUFFER_TOO_SMALL = 5,
  GS_STATUS_INTERNAL = 6,
  GS_STATUS_PANIC = 7,
} GsStatus;

typedef struct GsForm GsForm;

typedef struct GsManifold GsManifold;

typedef struct GsMeasure GsMeasure;

typedef struct GsPath GsPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *gs_version(void);

/**
 * Message of the last failed call on this thread ("" after a success).
 * Valid until the next `gs_*` call on the same thread.
 */
const char *gs_last_error_message(void);

/**
 * Parses a manifold spec such as `"euclidean:2"`, `"torus:2:1,1"`, `"sphere2"`, `"hyperbolic2"`.
 *
 * # Safety
 * `spec` must be a valid NUL-terminated string and `out_manifold` a valid pointer.
 */
enum GsStatus gs_manifold_parse(const char *spec, struct GsManifold **out_manifold);

/**
 * # Safety
 * `m` must be null or a handle from [`gs_manifold_parse`] not yet freed.
 */
void gs_manifold_free(struct GsManifold *m);

/**
 * Intrinsic dimension, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t gs_manifold_dim(const struct GsManifold *m);

/**
 * Number of coordinates of a point (3 on the sphere), or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t gs_manifold_coord_len(const struct GsManifold *m);

/**
 * Geodesic distance. `x` and `y` hold `coord_len` values each.
 *
 * # Safety
 * Pointers must be valid for `coord_len` reads and one write.
 */
enum GsStatus gs_manifold_dist(const struct GsManifold *m,
                               const double *x,
                               const double *y,
                               double *out_dist);

/**
 * exp_x(v), written to `out_y` (`coord_len` values).
 *
 * # Safety
 * Pointers must be valid for `coord_len` reads or writes.
 */
enum GsStatus gs_manifold_exp(const struct GsManifold *m,
                              const double *x,
                              const double *v,
                              double *out_y);

/**
 * log_x(y), written to `out_v` (`coord_len` values). Fails with
 * `CutLocus` when no unique minimizing geodesic exists.
 *
 * # Safety
 * Pointers must be valid for `coord_len` reads or writes.
 */
enum GsStatus gs_manifold_log(const struct GsManifold *m,
                              const double *x,
                              const double *y,
                              double *out_v);

/**
 * Parses an interval measure such as `"dirac:0.5"`, `"lebesgue"`, `"mix:0.5@0+0.5@1"`.
 *
 * # Safety
 * `spec` must be a valid NUL-terminated string and `out_measure` a valid pointer.
 */
enum GsStatus gs_measure_parse(const char *spec, struct GsMeasure **out_measure);

/**
 * # Safety
 * `p` must be null or a handle from [`gs_measure_parse`] not yet freed.
 */
void gs_measure_free(struct GsMeasure *p);

/**
 * First moment M₁ of the measure.
 *
 * # Safety
 * `p` must be a live handle and `out_m1` valid for one write.
 */
enum GsStatus gs_measure_first_moment(const struct GsMeasure *p, double *out_m1);

/**
 * Looks up a registered 1-form on `m` by key, e.g. `"x_dy"` or `"a_dtheta:0.3"`.
 *
 * # Safety
 * `m` must be a live handle, `key` a NUL-terminated string, `out_form` valid.
 */
enum GsStatus gs_form_lookup(const struct GsManifold *m, const char *key, struct GsForm **out_form);

/**
 * # Safety
 * `f` must be null or a handle from [`gs_form_lookup`] not yet freed.
 */
void gs_form_free(struct GsForm *f);

/**
 * Samples the dyadic skeleton at level `k` of a Brownian path on [0, t]
 * started at `x0`. The result depends only on `(seed, path_index)`.
 *
 * # Safety
 * `m` must be a live handle, `x0` valid for `coord_len` reads, `out_path` valid.
 */
enum GsStatus gs_sample_bm(const struct GsManifold *m,
                           const double *x0,
                           double t,
                           uint32_t k,
                           uint64_t seed,
                           uint64_t path_index,
                           struct GsPath **out_path);

/**
 * # Safety
 * `p` must be null or a handle from [`gs_sample_bm`] not yet freed.
 */
void gs_path_free(struct GsPath *p);

/**
 * Number of points (2^k + 1), or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t gs_path_len(const struct GsPath *p);

/**
 * Copies the path points, row-major, into `buf` of `buf_len` doubles.
 * Fails with `BufferTooSmall` unless `buf_len ≥ len · coord_len`.
 *
 * # Safety
 * `buf` must be valid for `buf_len` writes.
 */
enum GsStatus gs_path_points(const struct GsPath *p, double *buf, size_t buf_len);

/**
 * Dyadic approximant A_P of the stochastic integral of `form` along `path`.
 *
 * # Safety
 * All handles must be live and `out_value` valid for one write.
 */
enum GsStatus gs_approx_a(const struct GsMeasure *measure,
                          const struct GsForm *form,
                          const struct GsPath *path,
                          double *out_value);

/**
 * Corrected approximant S_P = A_P + (2M₁ − 1)·∫ d*α dt, which has the
 * Stratonovich limit for every P.
 *
 * # Safety
 * All handles must be live and `out_value` valid for one write.
 */
enum GsStatus gs_approx_s(const struct GsMeasure *measure,
                          const struct GsForm *form,
                          const struct GsPath *path,
                          double *out_value);

/**
 * Monte Carlo estimate of (e^{−tH} f)(x) on the 2π circle for α = a dθ,
 * with registered potential and function keys. `out_value` receives
 * [re, im]; `out_stderr` may be null.
 *
 * # Safety
 * Strings must be NUL-terminated, `out_value` valid for two writes.
 */
enum GsStatus gs_fki_circle_mc(double a,
                               const char *potential,
                               const char *function,
                               double x,
                               double t,
                               size_t n_paths,
                               uint32_t k,
                               uint64_t seed,
                               double *out_value,
                               double *out_stderr);

/**
 * Spectral reference for [`gs_fki_circle_mc`] using Fourier modes −n_modes..=n_modes.
 *
 * # Safety
 * Strings must be NUL-terminated, `out_value` valid for two writes.
 */
enum GsStatus gs_fki_circle_spectral(double a,
                                     const char *potential,
                                     const char *function,
                                     double x,
                                     double t,
                                     size_t n_modes,
                                     double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOSTOCH_H */
