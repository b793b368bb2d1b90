#ifndef DOMSPLIT_H
#define DOMSPLIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsExtension {
  DS_EXTENSION_PERIODIC = 0,
  DS_EXTENSION_CONSTANT = 1,
  DS_EXTENSION_ZERO = 2,
} DsExtension;

typedef enum DsStatus {
  DS_OK = 0,
  DS_NULL_POINTER = 1,
  DS_INVALID_ARGUMENT = 2,
  DS_RANGE = 3,
  DS_SINGULAR = 4,
  DS_ILL_CONDITIONED = 5,
  DS_INTERNAL = 6,
  DS_PANIC = 7,
} DsStatus;

typedef enum DsVerdict {
  DS_VALID = 0,
  DS_MARGINAL = 1,
  DS_FAILED = 2,
} DsVerdict;

// Jacobi operator handle.
typedef struct DsOperator DsOperator;

// Spectrum approximation handle.
typedef struct DsSpectrum DsSpectrum;

// Certificate summary. Quantities that were not evaluated are NaN, or 0 for `n`.
typedef struct DsCertificate {
  enum DsVerdict verdict;
  // Failed condition 1–4, or 0.
  int32_t condition_failed;
  uint32_t n;
  double delta_sep;
  double m_n;
  double domination_margin;
  double invariance_residual;
  double alpha;
  double alpha_prime;
  double epsilon;
} DsCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. Valid until the
// next failing call on the same thread.
const char *ds_last_error_message(void);

// Library version as a static string.
const char *ds_version(void);

// Operator on `[lo, hi]` from `len = hi − lo + 1` coefficients.
enum DsStatus ds_operator_new(int64_t lo,
                              int64_t hi,
                              const double *a_re,
                              const double *a_im,
                              const double *b,
                              size_t len,
                              enum DsExtension extension,
                              struct DsOperator **out);

// Operator from its JSON file format.
enum DsStatus ds_operator_from_json(const char *json, struct DsOperator **out);

void ds_operator_free(struct DsOperator *op);

// Certify the cocycle of `op` at `E` with default thresholds.
enum DsStatus ds_certify(const struct DsOperator *op,
                         double e_re,
                         double e_im,
                         struct DsCertificate *out);

// Spectrum approximation from truncations of the given sizes.
enum DsStatus ds_spectrum(const struct DsOperator *op,
                          const size_t *sizes,
                          size_t n_sizes,
                          struct DsSpectrum **out);

// Number of intervals in the spectral cover.
enum DsStatus ds_spectrum_cover_len(const struct DsSpectrum *spec, size_t *out);

// Endpoints of cover interval `index`.
enum DsStatus ds_spectrum_cover(const struct DsSpectrum *spec,
                                size_t index,
                                double *lo,
                                double *hi);

// Distance from `E` to the spectral cover.
enum DsStatus ds_spectrum_dist(const struct DsSpectrum *spec,
                               double e_re,
                               double e_im,
                               double *out);

void ds_spectrum_free(struct DsSpectrum *spec);

// Resolvent entry `(J − E)^{-1}(n, j)` on the window enlarged by `margin` sites.
enum DsStatus ds_greens_value(const struct DsOperator *op,
                              double e_re,
                              double e_im,
                              int64_t j,
                              int64_t n,
                              int64_t margin,
                              double *out_re,
                              double *out_im);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DOMSPLIT_H */
