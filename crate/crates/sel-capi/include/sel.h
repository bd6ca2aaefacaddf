#ifndef SEL_CAPI_H
#define SEL_CAPI_H

/* Generated by cbindgen from sel-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SelStatus {
  SEL_STATUS_OK = 0,
  SEL_STATUS_NULL_POINTER = 1,
  SEL_STATUS_INVALID_ARGUMENT = 2,
  SEL_STATUS_NUMERICAL_BLOWUP = 3,
  SEL_STATUS_IO_ERROR = 4,
  SEL_STATUS_OUT_OF_RANGE = 5,
  SEL_STATUS_PANIC = 6,
} SelStatus;

/**
 * Opaque model-parameter handle.
 */
typedef struct SelParams SelParams;

/**
 * Opaque simulation handle: one splitting trajectory advanced window by
 * window.
 */
typedef struct SelSimulation SelSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sel_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *sel_version(void);

/**
 * Creates model parameters; theta and kappa are derived from gamma.
 *
 * # Safety
 * `out` must be a valid pointer to a pointer slot.
 */
enum SelStatus sel_params_new(double gamma,
                              double alpha,
                              double epsilon,
                              double a0,
                              double m1,
                              double m2,
                              struct SelParams **out);

/**
 * Frees a parameter handle. Null is a no-op.
 *
 * # Safety
 * `p` must have come from `sel_params_new` and not been freed before.
 */
void sel_params_free(struct SelParams *p);

/**
 * Writes theta = (gamma - 1) / 2.
 *
 * # Safety
 * `p` and `out` must be valid.
 */
enum SelStatus sel_params_theta(const struct SelParams *p, double *out);

/**
 * Writes kappa = theta^2 / gamma.
 *
 * # Safety
 * `p` and `out` must be valid.
 */
enum SelStatus sel_params_kappa(const struct SelParams *p, double *out);

/**
 * Pressure p(rho) = kappa rho^gamma; rejects negative rho.
 *
 * # Safety
 * `p` and `out` must be valid.
 */
enum SelStatus sel_pressure(const struct SelParams *p, double rho, double *out);

/**
 * Builds a simulation from the plain-text key=value config format used by
 * the `sel` CLI. The Brownian path uses seed slot 0 of the configured base
 * seed.
 *
 * # Safety
 * `config_text` must be a NUL-terminated string and `out` a valid slot.
 */
enum SelStatus sel_sim_new_from_config(const char *config_text, struct SelSimulation **out);

/**
 * Frees a simulation handle. Null is a no-op.
 *
 * # Safety
 * `sim` must have come from `sel_sim_new_from_config`.
 */
void sel_sim_free(struct SelSimulation *sim);

/**
 * Number of grid cells.
 *
 * # Safety
 * `sim` and `out` must be valid.
 */
enum SelStatus sel_sim_n_cells(const struct SelSimulation *sim, uintptr_t *out);

/**
 * Current simulation time.
 *
 * # Safety
 * `sim` and `out` must be valid.
 */
enum SelStatus sel_sim_time(const struct SelSimulation *sim, double *out);

/**
 * Advances the splitting scheme by `k` windows (deterministic leg then
 * stochastic leg per window). Errors with SEL_STATUS_OUT_OF_RANGE past
 * the configured horizon.
 *
 * # Safety
 * `sim` must be valid.
 */
enum SelStatus sel_sim_advance_windows(struct SelSimulation *sim, uintptr_t k);

/**
 * Copies the cell-center density and momentum into caller-owned buffers of
 * length `len` (= number of cells).
 *
 * # Safety
 * `rho_out` and `m_out` must point to writable buffers of at least `len`
 * doubles.
 */
enum SelStatus sel_sim_copy_state(const struct SelSimulation *sim,
                                  double *rho_out,
                                  double *m_out,
                                  uintptr_t len);

/**
 * Discrete total mass of the current state.
 *
 * # Safety
 * `sim` and `out` must be valid.
 */
enum SelStatus sel_sim_mass(const struct SelSimulation *sim, double *out);

/**
 * Riemann-invariant envelope of the current state: max w and min z.
 *
 * # Safety
 * All pointers must be valid.
 */
enum SelStatus sel_sim_invariants(const struct SelSimulation *sim,
                                  double *out_max_w,
                                  double *out_min_z);

/**
 * Per-path seed derivation (splitmix64 finalizer of base XOR
 * (index+1) * 0x9E3779B97F4A7C15). Pure.
 */
uint64_t sel_derive_seed(uint64_t base_seed, uint64_t path_index);

/**
 * Least-squares exponential fit of (t, v) samples on [t_lo, t_hi]:
 * v ~ prefactor * exp(-rate * t). All values inside the window must be
 * positive.
 *
 * # Safety
 * `ts` and `vs` must hold `len` doubles; the out pointers must be valid.
 */
enum SelStatus sel_fit_decay(const double *ts,
                             const double *vs,
                             uintptr_t len,
                             double t_lo,
                             double t_hi,
                             double *out_rate,
                             double *out_prefactor,
                             double *out_r_squared);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEL_CAPI_H */
