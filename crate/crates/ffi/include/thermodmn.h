#ifndef THERMODMN_H
#define THERMODMN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum TdmnStatus {
  TDMN_STATUS_OK = 0,
  TDMN_STATUS_INVALID_ARGUMENT = 1,
  TDMN_STATUS_NON_CONVERGENCE = 2,
  TDMN_STATUS_IO = 3,
  TDMN_STATUS_NULL_POINTER = 4,
  TDMN_STATUS_PANIC = 5,
} TdmnStatus;

/**
 * Opaque network topology: directions and leaf weights.
 */
typedef struct TdmnModel TdmnModel;

/**
 * Opaque material point: a network solver with its history state.
 */
typedef struct TdmnPoint TdmnPoint;

/**
 * Response of one committed time step.
 */
typedef struct TdmnStepOutput {
  /**
   * Stress [MPa].
   */
  double stress[6];
  /**
   * Thermomechanical coupling heat rate [MPa/s].
   */
  double coupling;
  /**
   * Dissipation rate [MPa/s].
   */
  double dissipation;
  /**
   * ∂σ/∂ε, row-major.
   */
  double c_eps[36];
  /**
   * ∂σ/∂θ.
   */
  double c_theta[6];
  /**
   * ∂ρ/∂ε.
   */
  double d_eps[6];
  /**
   * ∂ρ/∂θ.
   */
  double d_theta;
  size_t iterations;
} TdmnStepOutput;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success. The
 * pointer stays valid until the next call on the same thread.
 */
const char *tdmn_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tdmn_version(void);

/**
 * Loads a model JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TdmnStatus tdmn_model_load(const char *path, struct TdmnModel **out);

/**
 * Random network of the given depth, reproducible from `seed`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum TdmnStatus tdmn_model_random(size_t depth, uint64_t seed, struct TdmnModel **out);

/**
 * Tree depth of a model.
 *
 * # Safety
 * `model` must come from this library and `depth` be writable.
 */
enum TdmnStatus tdmn_model_depth(const struct TdmnModel *model, size_t *depth);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void tdmn_model_free(struct TdmnModel *model);

/**
 * Linear-elastic effective stiffness of a network for phase stiffnesses
 * `c1` and `c2`.
 *
 * # Safety
 * `c1`, `c2` and `out` must point to 36 doubles.
 */
enum TdmnStatus tdmn_homogenize_linear(const struct TdmnModel *model,
                                       const double *c1,
                                       const double *c2,
                                       double *out);

/**
 * Stiffness of a two-phase rank-one laminate with unit normal `normal` and
 * volume fraction `fraction1` of the first phase.
 *
 * # Safety
 * `c1`, `c2` and `out` must point to 36 doubles, `normal` to 3.
 */
enum TdmnStatus tdmn_laminate_stiffness(const double *c1,
                                        const double *c2,
                                        const double *normal,
                                        double fraction1,
                                        double *out);

/**
 * Material point on a model. A null `materials_path` selects glass fibers
 * in a PA66 matrix.
 *
 * # Safety
 * `model` must come from this library, `materials_path` be null or a
 * NUL-terminated string, and `out` be writable.
 */
enum TdmnStatus tdmn_point_new(const struct TdmnModel *model,
                               const char *materials_path,
                               struct TdmnPoint **out);

/**
 * Advances the point to total strain `strain` and temperature `theta` over
 * `dt` seconds. The state is committed only on success.
 *
 * # Safety
 * `point` must come from this library, `strain` point to 6 doubles and
 * `out` be writable.
 */
enum TdmnStatus tdmn_point_step(struct TdmnPoint *point,
                                const double *strain,
                                double theta,
                                double dt,
                                struct TdmnStepOutput *out);

/**
 * Returns the point to its virgin state.
 *
 * # Safety
 * `point` must come from this library.
 */
enum TdmnStatus tdmn_point_reset(struct TdmnPoint *point);

/**
 * Effective heat capacity at constant strain [J m⁻³ K⁻¹].
 *
 * # Safety
 * `point` must come from this library and `capacity` be writable.
 */
enum TdmnStatus tdmn_point_heat_capacity(const struct TdmnPoint *point, double *capacity);

/**
 * Releases a point. Null is ignored.
 *
 * # Safety
 * `point` must come from this library and not be used afterwards.
 */
void tdmn_point_free(struct TdmnPoint *point);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMODMN_H */
