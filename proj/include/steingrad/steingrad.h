#ifndef STEINGRAD_STEINGRAD_H
#define STEINGRAD_STEINGRAD_H

/*
 * steingrad: kernel score-function estimators, kernelised Stein discrepancy
 * and a gradient-free Hamiltonian Monte Carlo harness.
 *
 * Conventions
 *   - Matrices are passed as row-major double arrays, one sample per row.
 *   - Every fallible call returns sg_status; on failure a description is
 *     available from sg_last_error_message() on the calling thread.
 *   - Objects are opaque handles released with the matching *_free call.
 *     Freeing NULL is a no-op.
 *   - Handles are immutable after creation and may be shared across threads.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SG_API __declspec(dllexport)
#else
#define SG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sg_status {
    SG_OK = 0,
    /* Input errors. */
    SG_ERR_INVALID_ARGUMENT = 1,
    SG_ERR_PARSE = 2,
    SG_ERR_UNSUPPORTED = 3,
    /* Numerical failures. */
    SG_ERR_DEGENERATE_BANDWIDTH = 10,
    SG_ERR_DEGENERATE_DENOMINATOR = 11,
    SG_ERR_SINGULAR_SYSTEM = 12,
    SG_ERR_NUMERICAL_DEGENERACY = 13,
    SG_ERR_DIVERGENCE = 14,
    /* Anything else (allocation failure, internal bug). */
    SG_ERR_INTERNAL = 99
} sg_status;

/* Non-zero for the numerical failure codes (10-19). */
SG_API int sg_status_is_numerical(sg_status status);
SG_API const char* sg_status_name(sg_status status);

/* Message of the last failed call on this thread; "" if none. */
SG_API const char* sg_last_error_message(void);

SG_API const char* sg_version(void);

/* ------------------------------------------------------------------------
 * Kernels and estimators
 */

typedef enum sg_kernel_family { SG_KERNEL_RBF = 0, SG_KERNEL_EPANECHNIKOV = 1 } sg_kernel_family;

typedef enum sg_statistic { SG_STATISTIC_V = 0, SG_STATISTIC_U = 1 } sg_statistic;

typedef enum sg_estimator_kind {
    SG_ESTIMATOR_STEIN_NONPARAM_V = 0,
    SG_ESTIMATOR_STEIN_NONPARAM_U = 1,
    SG_ESTIMATOR_STEIN_PARAM_V = 2,
    SG_ESTIMATOR_STEIN_PARAM_U = 3,
    SG_ESTIMATOR_SCORE_MATCH_RBF = 4,
    SG_ESTIMATOR_SCORE_MATCH_EPANECHNIKOV = 5,
    SG_ESTIMATOR_KDE = 6
} sg_estimator_kind;

/* sigma2 is the squared RBF bandwidth and is ignored for Epanechnikov. */
typedef struct sg_kernel {
    sg_kernel_family family;
    double sigma2;
} sg_kernel;

/* Stable names, e.g. "stein_nonparam_v", "rbf", "V". Parsing accepts
 * either case for the statistic. */
SG_API const char* sg_estimator_kind_name(sg_estimator_kind kind);
SG_API sg_status sg_estimator_kind_from_name(const char* name, sg_estimator_kind* out);
SG_API const char* sg_kernel_family_name(sg_kernel_family family);
SG_API sg_status sg_kernel_family_from_name(const char* name, sg_kernel_family* out);
SG_API const char* sg_statistic_name(sg_statistic statistic);
SG_API sg_status sg_statistic_from_name(const char* name, sg_statistic* out);

/* Squared median pairwise distance of k >= 2 samples. */
SG_API sg_status sg_median_heuristic(const double* samples, size_t k, size_t d, double* sigma2);

typedef struct sg_estimator sg_estimator;

typedef struct sg_estimator_info {
    sg_estimator_kind kind;
    sg_kernel kernel;
    double eta;
    size_t k;
    size_t d;
    int jitter_level; /* rung of the jitter ladder used by the fit, 0 if none */
    double jitter;
    int can_predict;
} sg_estimator_info;

/* Fits an estimator on k samples of dimension d. `predictive` caches the
 * inverse needed for out-of-sample prediction by the non-parametric V kind. */
SG_API sg_status sg_estimator_fit(sg_estimator_kind kind, const double* samples, size_t k, size_t d,
                                  sg_kernel kernel, double eta, int predictive, sg_estimator** out);
SG_API void sg_estimator_free(sg_estimator* estimator);
SG_API sg_status sg_estimator_get_info(const sg_estimator* estimator, sg_estimator_info* info);

/* Estimated scores at the training samples; `out` holds k * d values. */
SG_API sg_status sg_estimator_gradients(const sg_estimator* estimator, double* out);

/* Estimated scores at n query points of the training dimension. */
SG_API sg_status sg_estimator_predict(const sg_estimator* estimator, const double* queries, size_t n, size_t d,
                                      double* out);

/* JSON round trip. The string returned through `out` is released with
 * sg_string_free. */
SG_API sg_status sg_estimator_to_json(const sg_estimator* estimator, char** out);
SG_API sg_status sg_estimator_from_json(const char* json, sg_estimator** out);
SG_API void sg_string_free(char* str);

/* ------------------------------------------------------------------------
 * Kernelised Stein discrepancy
 */

typedef struct sg_ksd_result {
    double value;
    sg_statistic statistic;
    int includes_constant;
} sg_ksd_result;

SG_API sg_status sg_ksd(const double* samples, const double* grads, size_t k, size_t d, sg_kernel kernel,
                        sg_statistic statistic, int includes_constant, sg_ksd_result* out);

/* ------------------------------------------------------------------------
 * Banana experiment: kernel-induced Hamiltonian flow with an exact
 * Metropolis-Hastings correction.
 */

typedef enum sg_preset { SG_PRESET_DESK = 0, SG_PRESET_PAPER = 1 } sg_preset;

SG_API sg_status sg_preset_from_name(const char* name, sg_preset* out);

typedef struct sg_banana_config {
    uint64_t seed;
    int use_exact_score; /* non-zero: flow uses the exact target score */
    sg_estimator_kind estimator;
    size_t n_train;
    double b;
    double v;
    double eta;
    double bandwidth_scale; /* multiplies the median-heuristic sigma2 */
    double stepsize;
    int n_leapfrog;
    int n_iters;
    int n_chains;
    double init_noise_std;
    double burn_in;
    int record_trajectories;
    unsigned threads; /* 0: hardware concurrency */
} sg_banana_config;

SG_API sg_status sg_banana_default_config(sg_preset preset, sg_banana_config* out);

typedef struct sg_banana_result sg_banana_result;

typedef struct sg_banana_stats {
    double acceptance_rate;
    double mean_x1;
    double se_x1; /* NaN with a single chain */
    double ksd_pooled;
    double ksd_mean_per_chain;
    size_t divergences;
    size_t post_burn_in;
    size_t pooled_ksd_samples;
    double ksd_sigma2;
    double estimator_sigma2; /* NaN for the exact score or Epanechnikov */
    int jitter_level;        /* -1 for the exact score */
    double jitter;
    size_t n_chains;
    size_t n_iters;
    int has_trajectories;
} sg_banana_stats;

SG_API sg_status sg_banana_run(const sg_banana_config* config, sg_banana_result** out);
SG_API void sg_banana_result_free(sg_banana_result* result);
SG_API sg_status sg_banana_result_stats(const sg_banana_result* result, sg_banana_stats* out);

/* States (n_iters x 2, row-major) and acceptance flags (n_iters) of one
 * chain; requires record_trajectories. Either output may be NULL. */
SG_API sg_status sg_banana_result_trajectory(const sg_banana_result* result, size_t chain, double* states,
                                             unsigned char* accepted);

/* ------------------------------------------------------------------------
 * Entropy-gradient check on z = sigma * eps, eps ~ N(0, 1).
 */

typedef struct sg_entropy_config {
    uint64_t seed;
    double sigma;
    size_t n_samples;
    double eta;
    double bandwidth_scale;
} sg_entropy_config;

SG_API sg_status sg_entropy_default_config(sg_entropy_config* out);

typedef struct sg_entropy_summary {
    double analytic; /* 1 / sigma */
    double exact_estimate;
    double exact_abs_error;
    double exact_rel_error;
    double sigma2;
} sg_entropy_summary;

typedef struct sg_entropy_estimate {
    sg_estimator_kind kind;
    double estimate;
    double abs_error;
    double rel_error;
} sg_entropy_estimate;

/* `estimates` receives one entry per requested kind, in order. */
SG_API sg_status sg_entropy_check(const sg_entropy_config* config, const sg_estimator_kind* kinds, size_t n_kinds,
                                  sg_entropy_summary* summary, sg_entropy_estimate* estimates);

#ifdef __cplusplus
}
#endif

#endif /* STEINGRAD_STEINGRAD_H */
