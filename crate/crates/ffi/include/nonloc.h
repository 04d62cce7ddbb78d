#ifndef NONLOC_H
#define NONLOC_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum NonlocStatus {
  NONLOC_STATUS_OK = 0,
  NONLOC_STATUS_NULL_POINTER = 1,
  NONLOC_STATUS_INVALID_ARGUMENT = 2,
  NONLOC_STATUS_CONFIG = 3,
  NONLOC_STATUS_DOMAIN = 4,
  NONLOC_STATUS_CONSISTENCY = 5,
  NONLOC_STATUS_SINGULAR = 6,
  NONLOC_STATUS_DEGENERATE_FIT = 7,
  NONLOC_STATUS_IO = 8,
  NONLOC_STATUS_NOT_CONVERGED = 9,
  NONLOC_STATUS_PANIC = 10,
} NonlocStatus;

/**
 * Opaque discretized operator on a grid of a 1-D domain.
 */
typedef struct NonlocPlan NonlocPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *nonloc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nonloc_version(void);

/**
 * Builds the operator for `K_ε(z) = 1/(ε^{1+2σ} + |z|^{1+2σ})` on `(lower, upper)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum NonlocStatus nonloc_plan_new_zero_order(double sigma,
                                             double epsilon,
                                             double lower,
                                             double upper,
                                             double h_target,
                                             double truncation_radius,
                                             struct NonlocPlan **out);

/**
 * Builds the operator described by the kernel, domain and grid blocks of a TOML run config.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NonlocStatus nonloc_plan_from_toml(const char *config_toml, struct NonlocPlan **out);

/**
 * Releases a plan; null is ignored.
 *
 * # Safety
 * `plan` must come from a constructor above and not be used afterwards.
 */
void nonloc_plan_free(struct NonlocPlan *plan);

/**
 * Number of closed-domain nodes, the length of every array argument.
 *
 * # Safety
 * `plan` must be a live handle and `len` a valid pointer.
 */
enum NonlocStatus nonloc_plan_len(const struct NonlocPlan *plan, uintptr_t *len);

/**
 * Writes the node coordinates and, optionally, the grid spacing.
 *
 * # Safety
 * `x` must have room for `len` values; `h` may be null.
 */
enum NonlocStatus nonloc_plan_nodes(const struct NonlocPlan *plan,
                                    double *x,
                                    uintptr_t len,
                                    double *h);

/**
 * Smallest exterior kernel mass over the unknowns.
 *
 * # Safety
 * `plan` must be a live handle and `nu0` a valid pointer.
 */
enum NonlocStatus nonloc_plan_nu0(const struct NonlocPlan *plan, double *nu0);

/**
 * Applies the operator to `u` given on the closed domain (zero outside).
 *
 * # Safety
 * `u` and `out` must each hold `len` values.
 */
enum NonlocStatus nonloc_plan_apply(const struct NonlocPlan *plan,
                                    const double *u,
                                    uintptr_t len,
                                    double *out);

/**
 * Solves `-I[u] = f` with a dense factorization.
 *
 * # Safety
 * `f` and `u` must each hold `len` values.
 */
enum NonlocStatus nonloc_solve_direct(const struct NonlocPlan *plan,
                                      const double *f,
                                      uintptr_t len,
                                      double *u);

/**
 * Solves `-I[u] = f` by damped fixed-point iteration with the default step.
 * Returns `NotConverged` with `u` holding the last iterate when `max_iter` runs out.
 *
 * # Safety
 * `f` and `u` must each hold `len` values; `iterations` may be null.
 */
enum NonlocStatus nonloc_solve_picard(const struct NonlocPlan *plan,
                                      const double *f,
                                      uintptr_t len,
                                      double tol,
                                      uintptr_t max_iter,
                                      double *u,
                                      uintptr_t *iterations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NONLOC_H */
