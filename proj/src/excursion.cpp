#include "bianchi/excursion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bianchi/error.hpp"

namespace bianchi {

namespace {

// (N(x) - N(y)) / N(y), exactly rounded.
double relative_norm_gap(const RingElement& x, const RingElement& y) {
  const mpz_class ny = y.norm();
  mpq_class gap(x.norm() - ny, ny);
  gap.canonicalize();
  return gap.get_d();
}

struct Summary {
  double mean = 0;
  double stderr_ = 0;
};

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return s;
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return s;
}

// Below this |rho|^2 - 1 is recomputed from exact norms.
constexpr double kCloseRatio = 1e-6;

}  // namespace

StepGeometry step_geometry(std::complex<double> g, std::complex<double> rho, double log_abs_q_prev, std::size_t n,
                           double rho_norm_minus_one) {
  const double ng = std::norm(g);
  const double e = rho_norm_minus_one >= 0 ? rho_norm_minus_one : std::norm(rho) - 1.0;
  if (!(e > 0) || !(ng < 1)) fail(ErrorKind::numeric, "step_geometry: endpoints do not straddle the unit circle");
  const double span = e + (1.0 - ng);  // |rho|^2 - |g|^2
  const double c = (1.0 - ng) / span;
  const std::complex<double> w = g + rho;
  const double aw = std::abs(w);
  const double r = std::sqrt((1.0 - ng) * e) * aw / span;
  // (-1)^n z_n + rho = (1 - c)(g + rho), with 1 - c = e / span.
  const double lift = e / span * aw;
  const double t = 2.0 * log_abs_q_prev + std::log(lift * lift / r + r);
  const std::complex<double> z = (n % 2 == 0 ? 1.0 : -1.0) * (g - c * w);
  return {t, aw / 2.0, {z.real(), z.imag(), r}};
}

double intersection_time(const Expansion& e, std::size_t n) {
  if (n < 1 || n > e.size()) fail(ErrorKind::precondition, "intersection_time: needs 1 <= n <= digits");
  const long k = static_cast<long>(n);
  const std::complex<double> g = e.iterate_approx(n);
  const std::complex<double> rho = ratio_approx(e.q(k), e.q(k - 1));
  const double gap = relative_norm_gap(e.q(k), e.q(k - 1));
  if (!(gap > 0)) fail(ErrorKind::numeric, "intersection_time: |q_n| <= |q_{n-1}|");
  return step_geometry(g, rho, log_abs(e.q(k - 1)), n, gap).t_n;
}

double apex_height(const Expansion& e, std::size_t n) {
  if (n < 1 || n > e.size()) fail(ErrorKind::precondition, "apex_height: needs 1 <= n <= digits");
  const long k = static_cast<long>(n);
  return std::abs(e.iterate_approx(n) + ratio_approx(e.q(k), e.q(k - 1))) / 2.0;
}

void excursion_times(std::vector<ExcursionRecord>& records) {
  double best = -HUGE_VAL;
  for (ExcursionRecord& r : records) {
    best = std::max(best, r.t_n);
    r.t_star_n = best;
  }
}

std::vector<double> running_max(const std::vector<double>& t) {
  std::vector<double> out(t.size());
  double best = -HUGE_VAL;
  for (std::size_t i = 0; i < t.size(); ++i) {
    best = std::max(best, t[i]);
    out[i] = best;
  }
  return out;
}

double lemma51_defect(const ExcursionRecord& r) {
  return std::abs(r.t_n - r.log_norm_q - 1.5 * std::log1p(-r.ratio * r.ratio));
}

ExcursionTrace build_trace(const FieldElement& beta, std::size_t n_max) {
  ExcursionTrace trace{beta, {}, false, 0.0};
  trace.log_abs_beta = beta.is_zero() ? -HUGE_VAL : std::log(std::abs(embed(beta)));
  trace.records.reserve(n_max);
  ExactOrbit orbit(beta, true);
  double best = -HUGE_VAL;
  while (trace.records.size() < n_max) {
    if (!orbit.advance()) {
      trace.terminated = true;
      break;
    }
    const std::size_t n = orbit.index();
    const std::complex<double> g = orbit.iterate_approx();
    const std::complex<double> rho = orbit.q_ratio();
    double gap = std::norm(rho) - 1.0;
    if (gap < kCloseRatio) gap = relative_norm_gap(orbit.q(), orbit.q_prev());
    const StepGeometry geo = step_geometry(g, rho, orbit.log_abs_q_prev(), n, gap);
    ExcursionRecord rec;
    rec.n = n;
    rec.t_n = geo.t_n;
    best = std::max(best, geo.t_n);
    rec.t_star_n = best;
    rec.apex_height = geo.apex_height;
    rec.log_norm_q = 2.0 * orbit.log_abs_q();
    // 1 - |q_{n-1}/q_n|^2 = gap / (1 + gap)
    rec.ratio = std::sqrt(1.0 / (1.0 + gap));
    rec.lemma51_defect = std::abs(rec.t_n - rec.log_norm_q - 1.5 * std::log(gap / (1.0 + gap)));
    rec.digit_abs = orbit.digit_abs();
    rec.log_abs_iterate = orbit.finished() ? -HUGE_VAL : std::log(std::abs(g));
    trace.records.push_back(rec);
  }
  if (orbit.finished()) trace.terminated = true;
  return trace;
}

std::vector<std::size_t> growth_subsequence(const ExcursionTrace& trace, double r_d) {
  if (!(r_d >= 1.0)) fail(ErrorKind::invalid_argument, "growth_subsequence: threshold must be >= 1");
  std::vector<std::size_t> out;
  for (const ExcursionRecord& r : trace.records) {
    // |q_n / q_{n-1}| = 1 / ratio
    if (r.ratio * r_d <= 1.0) out.push_back(r.n);
  }
  return out;
}

double default_growth_threshold(Discriminant d) { return (1.0 + 1.0 / d.cell_radius()) / 2.0; }

CStarEstimate cstar_estimate(const std::vector<ExcursionTrace>& traces, std::size_t n_min) {
  if (traces.empty()) fail(ErrorKind::precondition, "cstar_estimate: no traces");
  const std::size_t N = traces.front().records.size();
  if (N < n_min) fail(ErrorKind::precondition, "cstar_estimate: traces shorter than the minimum length");
  std::vector<double> star, cross, birk;
  for (const ExcursionTrace& tr : traces) {
    if (tr.records.size() != N) fail(ErrorKind::precondition, "cstar_estimate: traces of unequal length");
    if (tr.terminated && tr.records.size() == N && tr.records.back().log_abs_iterate == -HUGE_VAL) {
      fail(ErrorKind::precondition, "cstar_estimate: terminated trace");
    }
    const double n = static_cast<double>(N);
    star.push_back(tr.records.back().t_star_n / n);
    cross.push_back(tr.records.back().log_norm_q / n);
    double sum = tr.log_abs_beta;
    for (const ExcursionRecord& r : tr.records) sum += r.log_abs_iterate;
    birk.push_back(-2.0 * sum / n);
  }
  const Summary a = summarize(star);
  const Summary b = summarize(cross);
  const Summary c = summarize(birk);
  CStarEstimate out;
  out.samples = traces.size();
  out.c_star = a.mean;
  out.stderr_c_star = a.stderr_;
  out.cross_estimator = b.mean;
  out.stderr_cross = b.stderr_;
  out.birkhoff = c.mean;
  out.stderr_birkhoff = c.stderr_;
  out.agreement = std::abs(a.mean - b.mean) < 3.0 * std::hypot(a.stderr_, b.stderr_);
  out.birkhoff_agreement = std::abs(a.mean - c.mean) < 3.0 * std::hypot(a.stderr_, c.stderr_);
  return out;
}

}  // namespace bianchi
