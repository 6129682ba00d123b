#pragma once

// Intersection times, excursion times and apex heights for the model
// geodesics from infinity to beta, beta + e^{-t} j.
//
// The n-th re-lifted geodesic P(n, beta) applied to that line has attracting
// endpoint (-1)^n G^n(beta) and repelling endpoint (-1)^{n+1} q_n / q_{n-1}.
// t_n is the time the model geodesic meets P(n, beta)^{-1} H(0).

#include <complex>
#include <cstddef>
#include <vector>

#include "bianchi/cfrac.hpp"
#include "bianchi/hyperbolic.hpp"

namespace bianchi {

struct ExcursionRecord {
  std::size_t n = 0;
  double t_n = 0;
  double t_star_n = 0;
  double apex_height = 0;
  double log_norm_q = 0;  // log N(q_n) = 2 log |q_n|
  double ratio = 0;       // |q_{n-1} / q_n|
  double lemma51_defect = 0;
  double digit_abs = 0;
  double log_abs_iterate = 0;  // log |G^n(beta)|; -inf at termination
};

struct ExcursionTrace {
  FieldElement beta;
  std::vector<ExcursionRecord> records;  // records[i].n == i + 1
  bool terminated = false;               // G^n(beta) hit 0 before the requested length
  double log_abs_beta = 0;
};

// Geometry of one step from G^n(beta) = g, q_n / q_{n-1} = rho and
// log |q_{n-1}|.
struct StepGeometry {
  double t_n;
  double apex_height;
  H3Point hemisphere_point;  // z_n + r_n j on the re-lifted geodesic
};

// rho_norm_minus_one is |rho|^2 - 1 when known more accurately than from rho;
// pass a negative value to derive it from rho.
StepGeometry step_geometry(std::complex<double> g, std::complex<double> rho, double log_abs_q_prev, std::size_t n,
                           double rho_norm_minus_one = -1.0);

// t_n for an exact expansion with at least n >= 1 digits.
double intersection_time(const Expansion& e, std::size_t n);
// |G^n(beta) + q_n / q_{n-1}| / 2.
double apex_height(const Expansion& e, std::size_t n);

// Running maximum; idempotent.
void excursion_times(std::vector<ExcursionRecord>& records);
std::vector<double> running_max(const std::vector<double>& t);

// |t_n - 2 log|q_n| - (3/2) log(1 - |q_{n-1}/q_n|^2)|.
double lemma51_defect(const ExcursionRecord& r);

// Streams the exact orbit of beta for up to n_max digits.
ExcursionTrace build_trace(const FieldElement& beta, std::size_t n_max);

// Indices n with |q_n / q_{n-1}| >= r_d.
std::vector<std::size_t> growth_subsequence(const ExcursionTrace& trace, double r_d);
// Midpoint of (1, 1 / A_d).
double default_growth_threshold(Discriminant d);

struct CStarEstimate {
  double c_star = 0;           // mean of t*_N / N
  double stderr_c_star = 0;
  double cross_estimator = 0;  // mean of 2 log|q_N| / N
  double stderr_cross = 0;
  double birkhoff = 0;  // mean of -(2/N) sum_{k <= N} log |G^k(beta)|
  double stderr_birkhoff = 0;
  bool agreement = false;  // |c_star - cross| < 3 combined stderr
  bool birkhoff_agreement = false;
  std::size_t samples = 0;
};

// Traces must be non-terminated and of equal length N >= n_min.
CStarEstimate cstar_estimate(const std::vector<ExcursionTrace>& traces, std::size_t n_min = 1000);

}  // namespace bianchi
