#ifndef HBUNDLE_H
#define HBUNDLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HbStatus {
  HB_STATUS_OK = 0,
  HB_STATUS_NULL_POINTER = 1,
  HB_STATUS_INVALID_ARGUMENT = 2,
  HB_STATUS_NUMERICAL = 3,
  HB_STATUS_PANIC = 4,
} HbStatus;

/*
 An interval exchange.
 */
typedef struct HbIet HbIet;

/*
 An affine skew product over an interval exchange.
 */
typedef struct HbSkew HbSkew;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *hb_version(void);

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *hb_last_error(void);

/*
 Builds an exchange from the monodromy `p` (values 1..=d, top order
 A, B, …) and lengths `lambda`.

 # Safety
 `monodromy` and `lambda` must point to `d` readable values; the output must be
 writable.
 */
enum HbStatus hb_iet_new(const uint32_t *monodromy,
                         const double *lambda,
                         size_t d,
                         struct HbIet **out_iet);

/*
 # Safety
 `iet` must come from [`hb_iet_new`] and not be used afterwards. NULL is
 ignored.
 */
void hb_iet_free(struct HbIet *iet);

/*
 # Safety
 `iet` must be a live handle and the output writable.
 */
enum HbStatus hb_iet_dimension(const struct HbIet *iet, size_t *out_d);

/*
 # Safety
 `iet` must be a live handle and the output writable.
 */
enum HbStatus hb_iet_total_length(const struct HbIet *iet, double *out_len);

/*
 # Safety
 `iet` must be a live handle and the output writable.
 */
enum HbStatus hb_iet_apply(const struct HbIet *iet, double x, double *out_x);

/*
 Writes `T¹x₀, …, Tⁿx₀` to `points`. `reliable` is cleared when the orbit
 passed within the breakpoint guard.

 # Safety
 `points` must have room for `n` values; `reliable` must be writable.
 */
enum HbStatus hb_iet_orbit(const struct HbIet *iet,
                           double x0,
                           size_t n,
                           double *points,
                           bool *reliable);

/*
 Checks heights and offsets against the cone, Weil integrality and every
 orbit constraint. `max_residual` receives the largest constraint
 residual (0 when there are none).

 # Safety
 `h` and `b` must point to `d` readable values; outputs must be writable.
 */
enum HbStatus hb_iet_is_admissible(const struct HbIet *iet,
                                   const double *h,
                                   const double *b,
                                   size_t d,
                                   bool *admissible,
                                   double *max_residual);

/*
 Skew product `(x, ρ) ↦ (Tx, ρ + h_α(x − ∂I_α) + b_α)`. The area
 `Σ λ_α h_α` must be an integer.

 # Safety
 `iet` must be a live handle, `h` and `b` must point to `d` readable
 values and the output must be writable. The new handle does not borrow `iet`.
 */
enum HbStatus hb_skew_new(const struct HbIet *iet,
                          const double *h,
                          const double *b,
                          size_t d,
                          struct HbSkew **out_skew);

/*
 # Safety
 `skew` must come from [`hb_skew_new`] and not be used afterwards. NULL is
 ignored.
 */
void hb_skew_free(struct HbSkew *skew);

/*
 # Safety
 `skew` must be a live handle and the outputs writable.
 */
enum HbStatus hb_skew_apply(const struct HbSkew *skew,
                            double x,
                            double rho,
                            double *out_x,
                            double *out_rho);

/*
 Birkhoff average of `e^{2πi·mode·ρ}` over `n` points from `(x0, rho0)`.

 # Safety
 `skew` must be a live handle and the outputs writable.
 */
enum HbStatus hb_skew_birkhoff_mode(const struct HbSkew *skew,
                                    int64_t mode,
                                    double x0,
                                    double rho0,
                                    size_t n,
                                    double *out_re,
                                    double *out_im);

/*
 Correlations `C(0), …, C(n_max)` of the constant mode-`mode` observable,
 by quadrature.

 # Safety
 `out_re` and `out_im` must each have room for `n_max + 1` values.
 */
enum HbStatus hb_skew_correlation(const struct HbSkew *skew,
                                  int64_t mode,
                                  size_t n_max,
                                  double *out_re,
                                  double *out_im);

/*
 Fiber shift after the square of side `t` started a quarter of the way
 into the longest interval, a quarter of its height up.

 # Safety
 `skew` must be a live handle and the output writable.
 */
enum HbStatus hb_skew_commutator_shift(const struct HbSkew *skew, double t, double *out_shift);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HBUNDLE_H */
