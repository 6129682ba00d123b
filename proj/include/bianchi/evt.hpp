#pragma once

// Monte Carlo drivers and extreme-value statistics for digit maxima and cusp
// excursions.
//
// Every sample draws from its own generator, seeded from (seed, stream,
// index), so results do not depend on how work is split across threads.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bianchi/cfrac.hpp"
#include "bianchi/excursion.hpp"
#include "bianchi/ring.hpp"

namespace bianchi {

using Rng = std::mt19937_64;

// Independent generator for one sample.
Rng sample_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Runs body(i) for i in [0, count) on `threads` workers (0 = hardware).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Sampling

// Half-height of the bounding box [-1/2, 1/2] x [-h, h] of K_d.
double cell_box_half_height(Discriminant d);
// area(K_d) / area(box)
double cell_box_acceptance(Discriminant d);

std::complex<double> sample_uniform_cell(Discriminant d, Rng& rng, std::size_t* rejected = nullptr);
// Uniform point of K_d whose real part and imaginary part / sqrt(d) are
// dyadic with `bits` fractional bits.
FieldElement sample_exact_cell(Discriminant d, unsigned bits, Rng& rng);

// Coordinate size that leaves room for about n digits before termination.
unsigned bits_for_digits(std::size_t n);

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

// sup |F_n - F| for the right-continuous empirical CDF of `sample`.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

double frechet_cdf(double y);                    // exp(-1/y^2)
double poisson_k_cdf(double y, unsigned k);      // exp(-1/y^2) sum_{j<k} y^{-2j} / j!
double galambos_cdf(double y);                   // exp(-1/y)

// ---------------------------------------------------------------------------
// Tail constant

struct TailEstimate {
  int d = 1;
  std::size_t length = 0;  // digits counted
  std::vector<double> thresholds;
  std::vector<double> tail_freq;
  std::vector<double> scaled;  // t^2 tail_freq(t)
  double h_hat = 0;
  double h_stderr = 0;
  double plateau_spread = 0;  // (max - min) / mean of the scaled values
  bool flat = true;           // spread <= 25%
  std::string warning;
  std::size_t chunks = 0;
  std::size_t restarts = 0;  // chunks that terminated early and were redrawn
};

struct TailOptions {
  std::size_t chunk_length = 4096;
  std::size_t burn_in = 64;
  std::size_t batches = 50;
  unsigned threads = 1;
};

std::vector<double> default_thresholds();

// Birkhoff frequencies of |a_n| > t along exact orbits of total length L,
// built from independent chunks after a burn-in.
TailEstimate estimate_tail_constant(Discriminant d, std::size_t length, const std::vector<double>& thresholds,
                                    std::uint64_t seed, const TailOptions& opt = {});

struct LebesgueTail {
  double t = 0;
  double scaled = 0;  // t^2 lambda{|a_1| > t} / lambda(K_1)
  double stderr_ = 0;
};

// d = 1: Monte Carlo over the disk |z| < 1/(t - 1), which contains {|a_1| > t}.
LebesgueTail lebesgue_tail_d1(double t, std::size_t draws, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Digit maxima

struct MaxDigitSample {
  int d = 1;
  std::size_t N = 0;
  std::size_t M = 0;
  unsigned k = 1;
  std::uint64_t seed = 0;
  unsigned bits = 0;
  std::vector<double> maxima;
  std::vector<std::vector<double>> k_maxima;  // k_maxima[j][i]: (j+1)-th largest |a_n| of sample i
  std::size_t resampled = 0;
};

MaxDigitSample max_digit_experiment(Discriminant d, std::size_t N, std::size_t M, std::uint64_t seed, unsigned k = 2,
                                    unsigned bits = 0, unsigned threads = 1);

enum class ReferenceCdf { frechet_sq, frechet_real, poisson_k };

struct FitReport {
  double fitted_scale = 0;
  double ks_distance = 1;
  ReferenceCdf reference = ReferenceCdf::frechet_sq;
};

// With C: KS distance of maxima / (C sqrt N) to exp(-1/y^2). Without C: the
// scale minimizing that distance.
FitReport frechet_fit(const MaxDigitSample& s, std::optional<double> C = std::nullopt);
// KS distance of the k-th maxima / (C sqrt N) to the Poisson reference.
FitReport poisson_k_fit(const MaxDigitSample& s, unsigned k, double C);

// Minimizes f over [lo, hi] by a grid followed by golden-section refinement.
double minimize_scalar(const std::function<double(double)>& f, double lo, double hi, std::size_t grid = 400);

// ---------------------------------------------------------------------------
// Regular continued fractions

struct GalambosResult {
  FitReport fit;
  std::size_t N = 0;
  std::size_t M = 0;
  std::vector<double> scaled_maxima;  // max a_n * log 2 / N
  double p_first_digit_one = 0;
  double sampler_chi2 = 0;  // Pearson statistic of x over 20 equal-mass bins
  std::size_t resampled = 0;
};

// x = 2^U - 1 from a double, refined with uniform low bits to `bits` bits.
mpq_class sample_gauss_measure(Rng& rng, unsigned bits);
// Digits of x in (0, 1) by reciprocal-floor, up to n of them.
std::vector<mpz_class> regular_cf_digits(const mpq_class& x, std::size_t n);
GalambosResult galambos_baseline(std::size_t N, std::size_t M, std::uint64_t seed, unsigned bits = 0,
                                 unsigned threads = 1);

// ---------------------------------------------------------------------------
// Cusp excursions

struct DirectCheck {
  std::vector<double> gaps;  // log(max direct height) - log(max apex)
  double p95_abs_gap = 0;
  double t_max = 0;
  double dt = 0;
  std::size_t capped = 0;  // reductions that hit the iteration cap
};

struct Theorem2Options {
  double c_d = 0;               // Frechet scale; required
  std::size_t direct_count = 100;
  double direct_T = 100;
  double direct_dt = 0.02;
  unsigned bits = 0;
  unsigned threads = 1;
};

struct Theorem2Result {
  double T = 0;
  std::size_t M = 0;
  double c_star = 0;  // mean t*_N / N at 4T
  double c_d = 0;
  double alpha_hat = 0;     // log(C_d / (2 sqrt C*))
  double alpha_fitted = 0;  // KS-minimizing shift
  double ks_distance = 1;   // exp(X - alpha_hat) against exp(-1/y^2)
  double ks_fitted = 1;
  double ks_T_vs_4T = 1;
  std::vector<double> stat_T;   // X at T
  std::vector<double> stat_4T;  // X at 4T
  std::size_t resampled = 0;
  DirectCheck direct;
};

Theorem2Result theorem2_experiment(Discriminant d, double T, std::size_t M, std::uint64_t seed,
                                   const Theorem2Options& opt);

// M traces of N records each for random exact betas; betas whose expansion
// terminates early are redrawn and counted in *resampled.
std::vector<ExcursionTrace> excursion_batch(Discriminant d, std::size_t N, std::size_t M, std::uint64_t seed,
                                            unsigned bits = 0, unsigned threads = 1, std::size_t* resampled = nullptr);

// Max over t in [0, t_max] (step dt) of the height of beta + e^{-t} j
// reduced into the fundamental domain, computed in extended precision.
double direct_max_height(const FieldElement& beta, double t_max, double dt, std::size_t* capped = nullptr);

}  // namespace bianchi
