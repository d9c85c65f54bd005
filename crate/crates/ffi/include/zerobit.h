#ifndef ZEROBIT_H
#define ZEROBIT_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  ZB_STATUS_OK = 0,
  ZB_STATUS_NULL_POINTER = 1,
  ZB_STATUS_INVALID_PARAMETER = 2,
  ZB_STATUS_LENGTH_MISMATCH = 3,
  ZB_STATUS_NON_CONVERGENCE = 4,
  ZB_STATUS_PANIC = 5,
  ZB_STATUS_INTERNAL = 6,
} ZbStatus;

typedef enum {
  ZB_EXPONENT_METHOD_CLOSED_FORM = 0,
  ZB_EXPONENT_METHOD_ATTACK_FREE = 1,
  ZB_EXPONENT_METHOD_NUMERIC_ORACLE = 2,
} ZbExponentMethod;

typedef enum {
  ZB_ZERO_REASON_NONE = 0,
  ZB_ZERO_REASON_GLOBAL_MIN_FEASIBLE = 1,
  ZB_ZERO_REASON_INSUFFICIENT_DISTORTION = 2,
} ZbZeroReason;

typedef enum {
  ZB_BRANCH_OPTIMAL = 0,
  ZB_BRANCH_DEGENERATE_SHRINK = 1,
  ZB_BRANCH_SIGN = 2,
} ZbBranch;

typedef enum {
  ZB_SIM_KIND_FALSE_NEGATIVE = 0,
  ZB_SIM_KIND_FALSE_POSITIVE = 1,
} ZbSimKind;

typedef enum {
  ZB_EMBEDDER_OPTIMAL = 0,
  ZB_EMBEDDER_SIGN = 1,
  ZB_EMBEDDER_NONE = 2,
} ZbEmbedder;

/**
 * Model parameters (σ_X², σ_Z², D, λ), validated on construction.
 */
typedef struct ZbParams ZbParams;

/**
 * A ±1 watermark sequence.
 */
typedef struct ZbWatermark ZbWatermark;

typedef struct {
  double e_fn;
  double r_star;
  double q_star;
  ZbExponentMethod method;
  ZbZeroReason zero_reason;
} ZbExponentReport;

typedef struct {
  double rho_abs;
  double empirical_mi;
  double threshold;
  bool present;
} ZbDetection;

typedef struct {
  double a;
  double b;
  double r;
  double alpha;
  double distortion_used;
  ZbBranch branch;
} ZbEmbedInfo;

typedef struct {
  size_t n;
  uint64_t trials;
  uint64_t failures;
  double p_hat;
  double ci_low;
  double ci_high;
  /**
   * NaN when no failure was observed.
   */
  double empirical_exponent;
  uint64_t master_seed;
} ZbBatchResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *zb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *zb_version(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
ZbStatus zb_params_new(double host_variance,
                       double attack_variance,
                       double distortion,
                       double fp_exponent,
                       ZbParams **out);

/**
 * # Safety
 * `params` must come from `zb_params_new` and not be used afterwards.
 */
void zb_params_free(ZbParams *params);

/**
 * Optimum false-negative exponent (closed form, attack-free when σ_Z² = 0).
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
ZbStatus zb_exponent(const ZbParams *params, ZbExponentReport *out);

/**
 * Brute-force minimization of the same objective, for cross-checking.
 *
 * # Safety
 * As for [`zb_exponent`].
 */
ZbStatus zb_exponent_oracle(const ZbParams *params, double tol, ZbExponentReport *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
ZbStatus zb_exponent_attack_free(double distortion,
                                 double host_variance,
                                 double fp_exponent,
                                 ZbExponentReport *out);

/**
 * λ₁ (optimum embedder; +inf when D ≥ σ_X²) and λ₂ (sign embedder).
 *
 * # Safety
 * Both output pointers must be valid for writes.
 */
ZbStatus zb_positivity_thresholds(double distortion,
                                  double host_variance,
                                  double *lambda1,
                                  double *lambda2);

/**
 * # Safety
 * `out` must be valid for writes.
 */
ZbStatus zb_watermark_generate(size_t n, uint64_t seed, ZbWatermark **out);

/**
 * Builds a watermark from `n` entries, each +1 or -1.
 *
 * # Safety
 * `signs` must point to `n` readable bytes and `out` be valid for writes.
 */
ZbStatus zb_watermark_from_signs(const int8_t *signs, size_t n, ZbWatermark **out);

/**
 * Length of the watermark, 0 for NULL.
 *
 * # Safety
 * `watermark` must be NULL or a live handle.
 */
size_t zb_watermark_len(const ZbWatermark *watermark);

/**
 * Copies the ±1 entries into `buf`, which must hold exactly `len` values.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
ZbStatus zb_watermark_copy(const ZbWatermark *watermark, double *buf, size_t len);

/**
 * # Safety
 * `watermark` must come from a `zb_watermark_*` constructor and not be used
 * afterwards.
 */
void zb_watermark_free(ZbWatermark *watermark);

/**
 * Hypercone detection at false-positive exponent `fp_exponent`.
 *
 * # Safety
 * `signal` must point to `len` readable values; `out` valid for writes.
 */
ZbStatus zb_detect(const double *signal,
                   size_t len,
                   const ZbWatermark *watermark,
                   double fp_exponent,
                   ZbDetection *out);

/**
 * Optimum embedder. Writes `len` samples to `y`; `info` may be NULL.
 *
 * # Safety
 * `host` must point to `len` readable values, `y` to `len` writable ones.
 */
ZbStatus zb_embed_optimal(const double *host,
                          size_t len,
                          const ZbWatermark *watermark,
                          double distortion,
                          double fp_exponent,
                          double *y,
                          ZbEmbedInfo *info);

/**
 * Sign embedder `y = x + sign(<x, u>) √D u`.
 *
 * # Safety
 * As for [`zb_embed_optimal`].
 */
ZbStatus zb_embed_sign(const double *host,
                       size_t len,
                       const ZbWatermark *watermark,
                       double distortion,
                       double *y,
                       ZbEmbedInfo *info);

/**
 * Seeded Monte Carlo batch. False-positive runs require `ZB_EMBEDDER_NONE`.
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
ZbStatus zb_simulate(const ZbParams *params,
                     ZbSimKind kind,
                     ZbEmbedder embedder,
                     size_t n,
                     uint64_t trials,
                     uint64_t master_seed,
                     ZbBatchResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZEROBIT_H */
