#ifndef CHAINLEARN_H
#define CHAINLEARN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChainlearnStatus {
  CHAINLEARN_STATUS_OK = 0,
  CHAINLEARN_STATUS_NULL_POINTER = 1,
  /**
   * Invalid distribution, policy or configuration.
   */
  CHAINLEARN_STATUS_INVALID_ARGUMENT = 2,
  CHAINLEARN_STATUS_DOMAIN = 3,
  CHAINLEARN_STATUS_PRECONDITION = 4,
  CHAINLEARN_STATUS_PROTOCOL = 5,
  CHAINLEARN_STATUS_ANALYSIS = 6,
  CHAINLEARN_STATUS_IO = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  CHAINLEARN_STATUS_INTERNAL = 8,
} ChainlearnStatus;

typedef enum ChainlearnBound {
  CHAINLEARN_BOUND_ETC = 0,
  CHAINLEARN_BOUND_ETC_LAST_ITERATE = 1,
  CHAINLEARN_BOUND_PIYAVSKII_SIMPLE = 2,
  CHAINLEARN_BOUND_PIYAVSKII = 3,
  CHAINLEARN_BOUND_ETC_FTL = 4,
  CHAINLEARN_BOUND_EXP3_VI = 5,
  CHAINLEARN_BOUND_EXP3_VI_SIMPLIFIED = 6,
} ChainlearnBound;

typedef enum ChainlearnSupplier {
  CHAINLEARN_SUPPLIER_ETC = 0,
  /**
   * Uses the default Lipschitz constant of the distribution.
   */
  CHAINLEARN_SUPPLIER_PIYAVSKII = 1,
  CHAINLEARN_SUPPLIER_ETC_NO_COST = 2,
} ChainlearnSupplier;

typedef enum ChainlearnRetailer {
  CHAINLEARN_RETAILER_BEST_RESPONSE = 0,
  CHAINLEARN_RETAILER_FTL = 1,
} ChainlearnRetailer;

/**
 * Opaque joint law of cost, price and demand.
 */
typedef struct ChainlearnDistribution ChainlearnDistribution;

/**
 * Opaque Exp3-VI learner with its own random stream.
 */
typedef struct ChainlearnExp3Vi ChainlearnExp3Vi;

typedef struct ChainlearnEquilibrium {
  double w_star;
  double q_star;
  double supplier_utility;
  double retailer_utility;
  double price_of_anarchy;
  bool unique;
} ChainlearnEquilibrium;

/**
 * Bound inputs; set unused optional fields to NaN.
 */
typedef struct ChainlearnBoundParams {
  double expected_cost;
  double expected_price;
  double density_floor;
  double lipschitz;
  double gamma;
  double eta;
} ChainlearnBoundParams;

typedef struct ChainlearnRegret {
  double supplier_regret;
  double retailer_regret;
  double l1_last_iterate;
} ChainlearnRegret;

/**
 * Zero-based grid indices and the price and quantity they stand for.
 */
typedef struct ChainlearnAction {
  size_t i;
  size_t j;
  double price;
  double quantity;
} ChainlearnAction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buffer` (NUL-terminated,
 * truncated to `capacity`) and returns the full message length in bytes.
 * Pass a null buffer to query the length.
 *
 * # Safety
 * `buffer` must be null or valid for `capacity` bytes.
 */
size_t chainlearn_last_error(char *buffer, size_t capacity);

/**
 * Deterministic cost `c`, price `p`, demand uniform on `[0, 1]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ChainlearnStatus chainlearn_distribution_uniform(double c,
                                                      double p,
                                                      struct ChainlearnDistribution **out);

/**
 * Deterministic cost and price, Weibull demand with scale `lambda` and shape `k`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ChainlearnStatus chainlearn_distribution_weibull(double c,
                                                      double p,
                                                      double lambda,
                                                      double k,
                                                      struct ChainlearnDistribution **out);

/**
 * Deterministic cost and price, exponential demand truncated to `[0, 1]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ChainlearnStatus chainlearn_distribution_trunc_exp(double c,
                                                        double p,
                                                        double rate,
                                                        struct ChainlearnDistribution **out);

/**
 * # Safety
 * `dist` must be null or a handle from a `chainlearn_distribution_*` constructor
 * that has not been freed.
 */
void chainlearn_distribution_free(struct ChainlearnDistribution *dist);

/**
 * # Safety
 * `dist` must be a live handle and `out` valid for writes.
 */
enum ChainlearnStatus chainlearn_solve_equilibrium(const struct ChainlearnDistribution *dist,
                                                   struct ChainlearnEquilibrium *out);

/**
 * The retailer's optimal order at wholesale price `w`.
 *
 * # Safety
 * `dist` must be a live handle and `out` valid for writes.
 */
enum ChainlearnStatus chainlearn_best_response(const struct ChainlearnDistribution *dist,
                                               double w,
                                               double *out);

/**
 * Bound value at horizon (or round) `t`.
 *
 * # Safety
 * `params` must be valid for reads and `out` valid for writes.
 */
enum ChainlearnStatus chainlearn_bound_value(enum ChainlearnBound kind,
                                             const struct ChainlearnBoundParams *params,
                                             size_t t,
                                             double *out);

/**
 * Plays one repeated game of `horizon` rounds and reports average regrets and
 * the last-iterate distance to the equilibrium.
 *
 * # Safety
 * `dist` must be a live handle and `out` valid for writes.
 */
enum ChainlearnStatus chainlearn_run_episode(const struct ChainlearnDistribution *dist,
                                             enum ChainlearnSupplier supplier,
                                             enum ChainlearnRetailer retailer,
                                             size_t horizon,
                                             uint64_t seed,
                                             struct ChainlearnRegret *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum ChainlearnStatus chainlearn_exp3vi_new(double gamma,
                                            double eta,
                                            uint64_t seed,
                                            struct ChainlearnExp3Vi **out);

/**
 * Number of prices `K` on the grid.
 *
 * # Safety
 * `learner` must be a live handle and `out` valid for writes.
 */
enum ChainlearnStatus chainlearn_exp3vi_grid_size(const struct ChainlearnExp3Vi *learner,
                                                  size_t *out);

/**
 * Draws the next price–quantity pair.
 *
 * # Safety
 * `learner` must be a live handle and `out` valid for writes.
 */
enum ChainlearnStatus chainlearn_exp3vi_sample(struct ChainlearnExp3Vi *learner,
                                               struct ChainlearnAction *out);

/**
 * Feeds back the censored sales `feedback = min(q, d)` and the round's cost.
 *
 * # Safety
 * `learner` must be a live handle and `action` valid for reads.
 */
enum ChainlearnStatus chainlearn_exp3vi_update(struct ChainlearnExp3Vi *learner,
                                               const struct ChainlearnAction *action,
                                               double feedback,
                                               double cost);

/**
 * # Safety
 * `learner` must be null or a live handle from [`chainlearn_exp3vi_new`].
 */
void chainlearn_exp3vi_free(struct ChainlearnExp3Vi *learner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAINLEARN_H */
