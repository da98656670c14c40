#ifndef VORTEXLAB_H
#define VORTEXLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VlScenario {
  VL_SCENARIO_DOWNWARD_HUMP = 0,
  VL_SCENARIO_UPWARD_HUMP = 1,
  VL_SCENARIO_MONOTONE = 2,
  VL_SCENARIO_MIN_AND_MAX = 3,
  VL_SCENARIO_OTHER = 4,
} VlScenario;

typedef enum VlStatus {
  VL_STATUS_OK = 0,
  VL_STATUS_NULL_POINTER = 1,
  VL_STATUS_INVALID_PARAMS = 2,
  VL_STATUS_SOLVER_FAILURE = 3,
  VL_STATUS_BUFFER_TOO_SMALL = 4,
  VL_STATUS_PANIC = 5,
} VlStatus;

typedef struct VlBeta VlBeta;

typedef struct VlNormalForm VlNormalForm;

typedef struct VlOperator VlOperator;

typedef struct VlSimulator VlSimulator;

// Geometry and drive. `delta = 0` disables the leads.
typedef struct VlParams {
  double half_width;
  double half_height;
  double delta;
  double field;
  double current;
  double gamma;
} VlParams;

typedef struct VlNormalFormInfo {
  double lambda1_re;
  double lambda1_im;
  double n4_re;
  double n4_im;
  // `Im n4 / Re n4`.
  double gamma;
  bool supercritical;
} VlNormalFormInfo;

typedef struct VlOrbit {
  double amplitude;
  double chi;
  double period;
} VlOrbit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *vl_last_error(void);

// Library version, static storage.
const char *vl_version(void);

// `L = 1`, `K = 2/3`, `delta = 4/15`, no field or current.
struct VlParams vl_params_canonical(void);

// # Safety
// `params` and `out` must be valid pointers.
enum VlStatus vl_operator_new(const struct VlParams *params,
                              size_t nx,
                              size_t ny,
                              struct VlOperator **out);

// # Safety
// `op` must come from `vl_operator_new` and not be used afterwards.
void vl_operator_free(struct VlOperator *op);

// Writes the `k` leading eigenvalues (by real part) to `re[0..k]`, `im[0..k]`.
//
// # Safety
// `re` and `im` must hold `k` doubles.
enum VlStatus vl_operator_eigenvalues(const struct VlOperator *op,
                                      size_t k,
                                      double *re,
                                      double *im);

// Critical current in `[lo, hi]` for the geometry and field of `params`.
//
// # Safety
// `params` and `ic` must be valid pointers.
enum VlStatus vl_find_ic(const struct VlParams *params,
                         size_t nx,
                         size_t ny,
                         double lo,
                         double hi,
                         double *ic);

// # Safety
// `op` and `out` must be valid pointers.
enum VlStatus vl_normal_form_new(const struct VlOperator *op, struct VlNormalForm **out);

// # Safety
// `nf` must come from `vl_normal_form_new` and not be used afterwards.
void vl_normal_form_free(struct VlNormalForm *nf);

// # Safety
// `nf` and `out` must be valid pointers.
enum VlStatus vl_normal_form_info(const struct VlNormalForm *nf, struct VlNormalFormInfo *out);

// Periodic orbit at `Gamma = Re lambda_1 + eps`.
//
// # Safety
// `nf` and `out` must be valid pointers.
enum VlStatus vl_hopf_orbit(const struct VlNormalForm *nf, double eps, struct VlOrbit *out);

// Center-line phase profile of `u1` from the operator the normal form was
// computed on.
//
// # Safety
// `op`, `nf` and `out` must be valid pointers.
enum VlStatus vl_beta_new(const struct VlOperator *op,
                          const struct VlNormalForm *nf,
                          struct VlBeta **out);

// # Safety
// `beta` must come from `vl_beta_new` and not be used afterwards.
void vl_beta_free(struct VlBeta *beta);

// Number of samples; 0 for a null handle.
//
// # Safety
// `beta` must be null or valid.
size_t vl_beta_len(const struct VlBeta *beta);

// Copies the samples into `y[0..len]` and `beta[0..len]`.
//
// # Safety
// `y` and `values` must hold `len` doubles.
enum VlStatus vl_beta_copy(const struct VlBeta *beta, double *y, double *values, size_t len);

// # Safety
// `beta` and `out` must be valid pointers.
enum VlStatus vl_beta_scenario(const struct VlBeta *beta, enum VlScenario *out);

// TDGL stepper; the state starts at `psi = 0` until set.
//
// # Safety
// `params` and `out` must be valid pointers.
enum VlStatus vl_simulator_new(const struct VlParams *params,
                               size_t nx,
                               size_t ny,
                               double dt,
                               struct VlSimulator **out);

// # Safety
// `sim` must come from `vl_simulator_new` and not be used afterwards.
void vl_simulator_free(struct VlSimulator *sim);

// Resets time to 0 with `psi` from `len = 2 nx ny` interleaved doubles.
//
// # Safety
// `psi` must hold `len` doubles.
enum VlStatus vl_simulator_set_state(struct VlSimulator *sim, const double *psi, size_t len);

// Advances `steps` time steps.
//
// # Safety
// `sim` must be a valid pointer.
enum VlStatus vl_simulator_step(struct VlSimulator *sim, size_t steps);

// Copies `psi` into `out[0..len]` (interleaved) and the time into `t`.
//
// # Safety
// `out` must hold `len` doubles; `t` may be null.
enum VlStatus vl_simulator_state(const struct VlSimulator *sim, double *out, size_t len, double *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VORTEXLAB_H */
