#ifndef BIANCHI_CF_H
#define BIANCHI_CF_H

/*
 * C interface to the complex continued fraction library.
 *
 * Every fallible call returns a bcf_status; on failure bcf_last_error()
 * describes the problem (thread-local, valid until the next call on the same
 * thread). Results live behind opaque handles released with the matching
 * *_free function. Strings handed out by the library are released with
 * bcf_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BCF_API __declspec(dllexport)
#else
#define BCF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bcf_status {
  BCF_OK = 0,
  BCF_INVALID_ARGUMENT = 1,
  BCF_PRECONDITION = 2,
  BCF_DIVISION_BY_ZERO = 3,
  BCF_NOT_CONVERGED = 4,
  BCF_NUMERIC = 5,
  BCF_OUT_OF_MEMORY = 6,
  BCF_INTERNAL = 7
} bcf_status;

BCF_API const char* bcf_version(void);
BCF_API const char* bcf_status_name(bcf_status status);
BCF_API const char* bcf_last_error(void);
BCF_API void bcf_string_free(char* s);
/* 1 for d in {1, 2, 3, 7, 11}. */
BCF_API int bcf_supported_d(int d);

/* ------------------------------------------------------------------ */
/* Expansions */

typedef struct bcf_expansion bcf_expansion;

typedef struct bcf_expansion_row {
  size_t n;
  double abs_iterate;    /* |G^n(beta)| */
  int determinant_ok;    /* p_{n-1} q_n - p_n q_{n-1} = (-1)^n, checked exactly */
} bcf_expansion_row;

/* z: "p/q+r/si", decimals, or terms in w. Points outside the closed cell
   fail with BCF_PRECONDITION. */
BCF_API bcf_status bcf_expand(int d, const char* z, size_t max_digits, bcf_expansion** out);
BCF_API void bcf_expansion_free(bcf_expansion* e);
BCF_API size_t bcf_expansion_size(const bcf_expansion* e);
BCF_API int bcf_expansion_terminated(const bcf_expansion* e);
BCF_API int bcf_expansion_is_exact(const bcf_expansion* e);
/* 1 <= n <= size */
BCF_API bcf_status bcf_expansion_row_at(const bcf_expansion* e, size_t n, bcf_expansion_row* out);
/* a_n, p_n, q_n as text; any output pointer may be NULL. */
BCF_API bcf_status bcf_expansion_strings(const bcf_expansion* e, size_t n, char** digit, char** p, char** q);

/* ------------------------------------------------------------------ */
/* Digit maxima */

typedef struct bcf_frechet_config {
  int d;
  uint64_t N;         /* digits per expansion */
  uint64_t M;         /* samples */
  uint64_t L;         /* orbit length for the tail constant */
  uint64_t seed;
  unsigned bits;      /* 0: automatic */
  unsigned k;         /* k-th maximum for the Poisson fit (>= 2) */
  unsigned threads;   /* 0: hardware */
} bcf_frechet_config;

typedef struct bcf_frechet_summary {
  double H_hat;
  double H_stderr;
  double C_hat;          /* sqrt(H_hat) */
  double ks_distance;    /* maxima / (C_hat sqrt N) against exp(-1/y^2) */
  double ks_poisson_k2;
  double ks_poisson_k;   /* for config.k */
  double fitted_scale;   /* KS-minimizing scale */
  double ks_fitted;
  double ks_inverse_scale; /* the same test with H_hat^{-1/2} in place of C_hat */
  double median_max;
  uint64_t resampled;
  unsigned bits;
  int tail_flat;
} bcf_frechet_summary;

typedef struct bcf_frechet bcf_frechet;

BCF_API bcf_status bcf_frechet_run(const bcf_frechet_config* config, bcf_frechet** out);
BCF_API void bcf_frechet_free(bcf_frechet* f);
BCF_API bcf_status bcf_frechet_get_summary(const bcf_frechet* f, bcf_frechet_summary* out);
BCF_API size_t bcf_frechet_count(const bcf_frechet* f);
/* Largest and second largest |a_n| of sample i. */
BCF_API bcf_status bcf_frechet_sample(const bcf_frechet* f, size_t i, double* max_abs, double* second_abs);

/* ------------------------------------------------------------------ */
/* Excursions */

typedef struct bcf_excursions_config {
  int d;
  uint64_t N;   /* records per trace */
  uint64_t M;   /* traces */
  uint64_t seed;
  unsigned bits;
  unsigned threads;
} bcf_excursions_config;

typedef struct bcf_excursions_summary {
  double c_star;
  double stderr_c_star;
  double cross_estimator;
  double stderr_cross;
  double birkhoff;
  double stderr_birkhoff;
  int agreement;
  int birkhoff_agreement;
  double defect_max;
  uint64_t resampled;
} bcf_excursions_summary;

typedef struct bcf_excursion_row {
  size_t n;
  double t_n;
  double t_star_n;
  double apex_height;
  double log_norm_q;
  double lemma51_defect;
} bcf_excursion_row;

typedef struct bcf_excursions bcf_excursions;

BCF_API bcf_status bcf_excursions_run(const bcf_excursions_config* config, bcf_excursions** out);
BCF_API void bcf_excursions_free(bcf_excursions* x);
BCF_API bcf_status bcf_excursions_get_summary(const bcf_excursions* x, bcf_excursions_summary* out);
/* records[index] of trace `sample`, index in [0, N) */
BCF_API bcf_status bcf_excursions_row_at(const bcf_excursions* x, size_t sample, size_t index, bcf_excursion_row* out);

/* ------------------------------------------------------------------ */
/* Cusp excursion limit law */

typedef struct bcf_theorem2_config {
  int d;
  double T;
  uint64_t M;
  uint64_t seed;
  double C_d;          /* <= 0: estimate sqrt(H) from a tail run of length L */
  uint64_t L;
  unsigned bits;
  unsigned threads;
  uint64_t direct_count;
  double direct_T;
  double direct_dt;
} bcf_theorem2_config;

typedef struct bcf_theorem2_summary {
  double T;
  uint64_t M;
  double c_star;
  double C_d;
  double alpha_hat;
  double alpha_fitted;
  double ks_distance;
  double ks_fitted;
  double ks_T_vs_4T;
  double direct_p95_gap;
  double direct_max_gap;
  uint64_t direct_capped;
  uint64_t resampled;
} bcf_theorem2_summary;

BCF_API bcf_status bcf_theorem2_run(const bcf_theorem2_config* config, bcf_theorem2_summary* out);

/* ------------------------------------------------------------------ */
/* Regular continued fraction baseline */

typedef struct bcf_galambos_config {
  uint64_t N;
  uint64_t M;
  uint64_t seed;
  unsigned bits;
  unsigned threads;
} bcf_galambos_config;

typedef struct bcf_galambos_summary {
  double ks_distance;
  double p_first_digit_one;
  double sampler_chi2;
  uint64_t resampled;
} bcf_galambos_summary;

BCF_API bcf_status bcf_galambos_run(const bcf_galambos_config* config, bcf_galambos_summary* out);

/* ------------------------------------------------------------------ */
/* Tail constant */

typedef struct bcf_tail_config {
  int d;
  uint64_t L;
  uint64_t seed;
  unsigned threads;
  uint64_t chunk_length;   /* 0: default */
  const double* thresholds; /* NULL: default grid over [10, 100] */
  size_t threshold_count;
  uint64_t lebesgue_draws;  /* d = 1 only; 0 skips the check */
  double lebesgue_t;
} bcf_tail_config;

typedef struct bcf_tail_summary {
  double H_hat;
  double H_stderr;
  double plateau_spread;
  int flat;
  uint64_t chunks;
  uint64_t restarts;
  double lebesgue_scaled;  /* NaN when not run */
  double lebesgue_stderr;
} bcf_tail_summary;

typedef struct bcf_tail bcf_tail;

BCF_API bcf_status bcf_tail_run(const bcf_tail_config* config, bcf_tail** out);
BCF_API void bcf_tail_free(bcf_tail* t);
BCF_API bcf_status bcf_tail_get_summary(const bcf_tail* t, bcf_tail_summary* out);
/* Empty when the plateau is flat. Owned by the handle. */
BCF_API const char* bcf_tail_warning(const bcf_tail* t);
BCF_API size_t bcf_tail_threshold_count(const bcf_tail* t);
BCF_API bcf_status bcf_tail_threshold_at(const bcf_tail* t, size_t j, double* threshold, double* freq, double* scaled);

/* ------------------------------------------------------------------ */
/* Identity and geometry suites */

typedef struct bcf_suite bcf_suite;

typedef struct bcf_check {
  const char* name;  /* owned by the handle */
  uint64_t trials;
  uint64_t failures;
  double worst;
} bcf_check;

BCF_API bcf_status bcf_identity_suite(int d, uint64_t count, unsigned bits, uint64_t n_max, uint64_t seed,
                                      unsigned threads, bcf_suite** out);
BCF_API bcf_status bcf_geometry_suite(int d, uint64_t count, uint64_t seed, unsigned threads, bcf_suite** out);
BCF_API void bcf_suite_free(bcf_suite* s);
BCF_API size_t bcf_suite_check_count(const bcf_suite* s);
BCF_API bcf_status bcf_suite_check_at(const bcf_suite* s, size_t j, bcf_check* out);

#ifdef __cplusplus
}
#endif

#endif
