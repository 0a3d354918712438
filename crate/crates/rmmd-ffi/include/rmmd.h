/* C interface for the rmmd kernel two-sample testing library. */

#ifndef RMMD_H
#define RMMD_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Kernel selector.
 */
typedef enum RmmdKernel {
  /**
   * Gaussian with the bandwidth field; pass 0 or a negative bandwidth
   * for the median heuristic.
   */
  RmmdKernel_Gaussian = 0,
  RmmdKernel_PeriodicCosh = 1,
  RmmdKernel_PeriodicLog = 2,
  RmmdKernel_ProductPeriodic = 3,
} RmmdKernel;

/**
 * Test statistic selector.
 */
typedef enum RmmdMethod {
  RmmdMethod_Rmmd = 0,
  RmmdMethod_Mmd = 1,
  RmmdMethod_Kfda = 2,
  RmmdMethod_Ks = 3,
} RmmdMethod;

/**
 * Null model selector.
 */
typedef enum RmmdNull {
  RmmdNull_Normal = 0,
  RmmdNull_Permutation = 1,
} RmmdNull;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum RmmdStatus {
  RmmdStatus_Ok = 0,
  RmmdStatus_NullPointer = 1,
  RmmdStatus_InvalidArgument = 2,
  RmmdStatus_SampleTooSmall = 3,
  RmmdStatus_DegenerateVariance = 4,
  RmmdStatus_IllConditioned = 5,
  RmmdStatus_InternalError = 6,
} RmmdStatus;

/**
 * Opaque handle over an n×dim sample.
 */
typedef struct RmmdSample RmmdSample;

/**
 * Plain-old-data test configuration.
 */
typedef struct RmmdTestOptions {
  enum RmmdMethod method;
  enum RmmdKernel kernel;
  /**
   * Gaussian bandwidth; <= 0 selects the median heuristic.
   */
  double bandwidth;
  /**
   * Periodic-log / product-periodic parameter in (0, 1).
   */
  double theta;
  double kappa_p;
  double kappa_q;
  /**
   * KFDA regularization, > 0.
   */
  double gamma;
  double alpha;
  enum RmmdNull null_mode;
  unsigned long long n_permutations;
  unsigned long long seed;
  /**
   * Nonzero: fall back to the permutation null on degenerate variance.
   */
  uint8_t fallback_on_degenerate;
} RmmdTestOptions;

/**
 * Test result, mirrors the library's outcome fields.
 */
typedef struct RmmdTestResult {
  double statistic;
  double p_value;
  /**
   * 1 when H0 is rejected at alpha.
   */
  uint8_t reject;
  double null_center;
  double null_scale;
  unsigned long long n_used;
  /**
   * The null mode that produced the p-value.
   */
  enum RmmdNull null_mode_used;
} RmmdTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Sensible defaults: rmmd, gaussian:median, kappa 1, alpha 0.05, normal
 * null with permutation fallback, 1000 permutations.
 */
struct RmmdTestOptions rmmd_test_options_default(void);

/**
 * Create a sample from a row-major buffer of `len` points in `dim`
 * dimensions. Returns NULL on invalid input (non-finite values, zero
 * sizes, or a null buffer).
 *
 * # Safety
 * `data` must point to at least `len * dim` readable doubles.
 */
struct RmmdSample *rmmd_sample_new(const double *data,
                                   unsigned long long len,
                                   unsigned long long dim);

/**
 * Release a sample handle. NULL is ignored.
 *
 * # Safety
 * `sample` must come from [`rmmd_sample_new`] and not be freed twice.
 */
void rmmd_sample_free(struct RmmdSample *sample);

/**
 * Number of points in the sample; 0 for NULL.
 *
 * # Safety
 * `sample` must be a live handle or NULL.
 */
unsigned long long rmmd_sample_len(const struct RmmdSample *sample);

/**
 * Run a two-sample test. On success fills `out` and returns `Ok`.
 *
 * # Safety
 * `x` and `y` must be live sample handles, `opts` and `out` valid pointers.
 */
enum RmmdStatus rmmd_test_run(const struct RmmdSample *x,
                              const struct RmmdSample *y,
                              const struct RmmdTestOptions *opts,
                              struct RmmdTestResult *out);

/**
 * Šidák-corrected per-comparison level 1 − (1 − alpha)^(1/n).
 */
enum RmmdStatus rmmd_sidak(double alpha_family, unsigned long long n_comparisons, double *out);

/**
 * Median pairwise distance of a sample (the gaussian:median base value).
 *
 * # Safety
 * `sample` must be a live handle, `out` a valid pointer.
 */
enum RmmdStatus rmmd_median_heuristic(const struct RmmdSample *sample, double *out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rmmd_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RMMD_H */
