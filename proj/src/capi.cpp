#include "bianchi_cf.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "bianchi/cfrac.hpp"
#include "bianchi/error.hpp"
#include "bianchi/evt.hpp"
#include "bianchi/excursion.hpp"
#include "bianchi/suites.hpp"

using namespace bianchi;

struct bcf_expansion {
  Expansion e;
};

struct bcf_frechet {
  MaxDigitSample sample;
  bcf_frechet_summary summary;
};

struct bcf_excursions {
  std::vector<ExcursionTrace> traces;
  bcf_excursions_summary summary;
};

struct bcf_tail {
  TailEstimate estimate;
  bcf_tail_summary summary;
};

struct bcf_suite {
  SuiteReport report;
};

namespace {

thread_local std::string last_error;

bcf_status set_error(bcf_status s, const char* what) {
  last_error = what;
  return s;
}

template <typename F>
bcf_status guard(F&& f) {
  try {
    last_error.clear();
    f();
    return BCF_OK;
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::invalid_argument: return set_error(BCF_INVALID_ARGUMENT, e.what());
      case ErrorKind::precondition: return set_error(BCF_PRECONDITION, e.what());
      case ErrorKind::division_by_zero: return set_error(BCF_DIVISION_BY_ZERO, e.what());
      case ErrorKind::not_converged: return set_error(BCF_NOT_CONVERGED, e.what());
      case ErrorKind::numeric: return set_error(BCF_NUMERIC, e.what());
    }
    return set_error(BCF_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(BCF_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return set_error(BCF_INTERNAL, e.what());
  } catch (...) {
    return set_error(BCF_INTERNAL, "unknown failure");
  }
}

bool supported(int d) { return d == 1 || d == 2 || d == 3 || d == 7 || d == 11; }

Discriminant disc(int d) {
  if (!supported(d)) fail(ErrorKind::invalid_argument, "d must be one of 1, 2, 3, 7, 11");
  return Discriminant(d);
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorKind::invalid_argument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

}  // namespace

extern "C" {

const char* bcf_version(void) { return "0.1.0"; }

const char* bcf_status_name(bcf_status status) {
  switch (status) {
    case BCF_OK: return "ok";
    case BCF_INVALID_ARGUMENT: return "invalid argument";
    case BCF_PRECONDITION: return "precondition violated";
    case BCF_DIVISION_BY_ZERO: return "division by zero";
    case BCF_NOT_CONVERGED: return "not converged";
    case BCF_NUMERIC: return "numeric failure";
    case BCF_OUT_OF_MEMORY: return "out of memory";
    case BCF_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bcf_last_error(void) { return last_error.c_str(); }

void bcf_string_free(char* s) { std::free(s); }

int bcf_supported_d(int d) { return supported(d) ? 1 : 0; }

// --------------------------------------------------------------------------

bcf_status bcf_expand(int d, const char* z, size_t max_digits, bcf_expansion** out) {
  return guard([&] {
    need(z, "z");
    need(out, "out");
    *out = nullptr;
    const Discriminant D = disc(d);
    const ParsedPoint p = parse_point(z, D);
    if (const auto* exact = std::get_if<FieldElement>(&p)) {
      *out = new bcf_expansion{expand(*exact, max_digits)};
    } else {
      *out = new bcf_expansion{expand(std::get<std::complex<double>>(p), D, max_digits)};
    }
  });
}

void bcf_expansion_free(bcf_expansion* e) { delete e; }

size_t bcf_expansion_size(const bcf_expansion* e) { return e ? e->e.size() : 0; }

int bcf_expansion_terminated(const bcf_expansion* e) { return e && e->e.terminated() ? 1 : 0; }

int bcf_expansion_is_exact(const bcf_expansion* e) { return e && e->e.is_exact() ? 1 : 0; }

bcf_status bcf_expansion_row_at(const bcf_expansion* e, size_t n, bcf_expansion_row* out) {
  return guard([&] {
    need(e, "expansion");
    need(out, "out");
    if (n < 1 || n > e->e.size()) fail(ErrorKind::invalid_argument, "row index out of range");
    const Expansion& x = e->e;
    const long k = static_cast<long>(n);
    const RingElement one(x.disc(), 1, 0);
    const RingElement det = x.p(k - 1) * x.q(k) - x.p(k) * x.q(k - 1);
    out->n = n;
    out->abs_iterate = std::abs(x.iterate_approx(n));
    out->determinant_ok = det == (n % 2 == 0 ? one : -one) ? 1 : 0;
  });
}

bcf_status bcf_expansion_strings(const bcf_expansion* e, size_t n, char** digit, char** p, char** q) {
  return guard([&] {
    need(e, "expansion");
    if (n < 1 || n > e->e.size()) fail(ErrorKind::invalid_argument, "row index out of range");
    const long k = static_cast<long>(n);
    std::string sa = e->e.digit(n).to_string();
    std::string sp = e->e.p(k).to_string();
    std::string sq = e->e.q(k).to_string();
    char* a = digit ? dup(sa) : nullptr;
    char* pp = nullptr;
    char* qq = nullptr;
    try {
      pp = p ? dup(sp) : nullptr;
      qq = q ? dup(sq) : nullptr;
    } catch (...) {
      std::free(a);
      std::free(pp);
      throw;
    }
    if (digit) *digit = a;
    if (p) *p = pp;
    if (q) *q = qq;
  });
}

// --------------------------------------------------------------------------

bcf_status bcf_frechet_run(const bcf_frechet_config* c, bcf_frechet** out) {
  return guard([&] {
    need(c, "config");
    need(out, "out");
    *out = nullptr;
    const Discriminant D = disc(c->d);
    if (c->k < 1) fail(ErrorKind::invalid_argument, "k must be positive");
    TailOptions opt;
    opt.threads = c->threads;
    const TailEstimate tail = estimate_tail_constant(D, c->L, default_thresholds(), c->seed, opt);
    if (!(tail.h_hat > 0)) fail(ErrorKind::numeric, "tail constant estimate is not positive");
    const unsigned k = std::max(2u, c->k);
    auto* f = new bcf_frechet{max_digit_experiment(D, c->N, c->M, c->seed, k, c->bits, c->threads), {}};
    try {
      bcf_frechet_summary& s = f->summary;
      s.H_hat = tail.h_hat;
      s.H_stderr = tail.h_stderr;
      s.tail_flat = tail.flat ? 1 : 0;
      s.C_hat = std::sqrt(tail.h_hat);
      s.ks_distance = frechet_fit(f->sample, s.C_hat).ks_distance;
      s.ks_inverse_scale = frechet_fit(f->sample, 1.0 / s.C_hat).ks_distance;
      s.ks_poisson_k2 = poisson_k_fit(f->sample, 2, s.C_hat).ks_distance;
      s.ks_poisson_k = poisson_k_fit(f->sample, c->k, s.C_hat).ks_distance;
      const FitReport fitted = frechet_fit(f->sample);
      s.fitted_scale = fitted.fitted_scale;
      s.ks_fitted = fitted.ks_distance;
      s.median_max = median(f->sample.maxima);
      s.resampled = f->sample.resampled;
      s.bits = f->sample.bits;
    } catch (...) {
      delete f;
      throw;
    }
    *out = f;
  });
}

void bcf_frechet_free(bcf_frechet* f) { delete f; }

bcf_status bcf_frechet_get_summary(const bcf_frechet* f, bcf_frechet_summary* out) {
  return guard([&] {
    need(f, "handle");
    need(out, "out");
    *out = f->summary;
  });
}

size_t bcf_frechet_count(const bcf_frechet* f) { return f ? f->sample.maxima.size() : 0; }

bcf_status bcf_frechet_sample(const bcf_frechet* f, size_t i, double* max_abs, double* second_abs) {
  return guard([&] {
    need(f, "handle");
    if (i >= f->sample.maxima.size()) fail(ErrorKind::invalid_argument, "sample index out of range");
    if (max_abs) *max_abs = f->sample.maxima[i];
    if (second_abs) *second_abs = f->sample.k_maxima[1][i];
  });
}

// --------------------------------------------------------------------------

bcf_status bcf_excursions_run(const bcf_excursions_config* c, bcf_excursions** out) {
  return guard([&] {
    need(c, "config");
    need(out, "out");
    *out = nullptr;
    const Discriminant D = disc(c->d);
    std::size_t resampled = 0;
    auto* x = new bcf_excursions{excursion_batch(D, c->N, c->M, c->seed, c->bits, c->threads, &resampled), {}};
    try {
      const CStarEstimate e = cstar_estimate(x->traces, 1);
      bcf_excursions_summary& s = x->summary;
      s.c_star = e.c_star;
      s.stderr_c_star = e.stderr_c_star;
      s.cross_estimator = e.cross_estimator;
      s.stderr_cross = e.stderr_cross;
      s.birkhoff = e.birkhoff;
      s.stderr_birkhoff = e.stderr_birkhoff;
      s.agreement = e.agreement ? 1 : 0;
      s.birkhoff_agreement = e.birkhoff_agreement ? 1 : 0;
      s.defect_max = 0;
      for (const ExcursionTrace& t : x->traces) {
        for (const ExcursionRecord& r : t.records) s.defect_max = std::max(s.defect_max, r.lemma51_defect);
      }
      s.resampled = resampled;
    } catch (...) {
      delete x;
      throw;
    }
    *out = x;
  });
}

void bcf_excursions_free(bcf_excursions* x) { delete x; }

bcf_status bcf_excursions_get_summary(const bcf_excursions* x, bcf_excursions_summary* out) {
  return guard([&] {
    need(x, "handle");
    need(out, "out");
    *out = x->summary;
  });
}

bcf_status bcf_excursions_row_at(const bcf_excursions* x, size_t sample, size_t index, bcf_excursion_row* out) {
  return guard([&] {
    need(x, "handle");
    need(out, "out");
    if (sample >= x->traces.size() || index >= x->traces[sample].records.size()) {
      fail(ErrorKind::invalid_argument, "record index out of range");
    }
    const ExcursionRecord& r = x->traces[sample].records[index];
    *out = {r.n, r.t_n, r.t_star_n, r.apex_height, r.log_norm_q, r.lemma51_defect};
  });
}

// --------------------------------------------------------------------------

bcf_status bcf_theorem2_run(const bcf_theorem2_config* c, bcf_theorem2_summary* out) {
  return guard([&] {
    need(c, "config");
    need(out, "out");
    const Discriminant D = disc(c->d);
    double cd = c->C_d;
    if (!(cd > 0)) {
      TailOptions topt;
      topt.threads = c->threads;
      cd = std::sqrt(estimate_tail_constant(D, c->L, default_thresholds(), c->seed, topt).h_hat);
    }
    Theorem2Options opt;
    opt.c_d = cd;
    opt.direct_count = c->direct_count;
    opt.direct_T = c->direct_T;
    opt.direct_dt = c->direct_dt;
    opt.bits = c->bits;
    opt.threads = c->threads;
    const Theorem2Result r = theorem2_experiment(D, c->T, c->M, c->seed, opt);
    bcf_theorem2_summary s{};
    s.T = r.T;
    s.M = r.M;
    s.c_star = r.c_star;
    s.C_d = r.c_d;
    s.alpha_hat = r.alpha_hat;
    s.alpha_fitted = r.alpha_fitted;
    s.ks_distance = r.ks_distance;
    s.ks_fitted = r.ks_fitted;
    s.ks_T_vs_4T = r.ks_T_vs_4T;
    s.direct_p95_gap = r.direct.gaps.empty() ? std::numeric_limits<double>::quiet_NaN() : r.direct.p95_abs_gap;
    s.direct_max_gap = 0;
    for (double g : r.direct.gaps) s.direct_max_gap = std::max(s.direct_max_gap, std::abs(g));
    s.direct_capped = r.direct.capped;
    s.resampled = r.resampled;
    *out = s;
  });
}

bcf_status bcf_galambos_run(const bcf_galambos_config* c, bcf_galambos_summary* out) {
  return guard([&] {
    need(c, "config");
    need(out, "out");
    const GalambosResult r = galambos_baseline(c->N, c->M, c->seed, c->bits, c->threads);
    *out = {r.fit.ks_distance, r.p_first_digit_one, r.sampler_chi2, r.resampled};
  });
}

// --------------------------------------------------------------------------

bcf_status bcf_tail_run(const bcf_tail_config* c, bcf_tail** out) {
  return guard([&] {
    need(c, "config");
    need(out, "out");
    *out = nullptr;
    const Discriminant D = disc(c->d);
    TailOptions opt;
    opt.threads = c->threads;
    if (c->chunk_length > 0) opt.chunk_length = c->chunk_length;
    std::vector<double> thresholds = default_thresholds();
    if (c->thresholds) thresholds.assign(c->thresholds, c->thresholds + c->threshold_count);
    auto* t = new bcf_tail{estimate_tail_constant(D, c->L, thresholds, c->seed, opt), {}};
    try {
      bcf_tail_summary& s = t->summary;
      s.H_hat = t->estimate.h_hat;
      s.H_stderr = t->estimate.h_stderr;
      s.plateau_spread = t->estimate.plateau_spread;
      s.flat = t->estimate.flat ? 1 : 0;
      s.chunks = t->estimate.chunks;
      s.restarts = t->estimate.restarts;
      s.lebesgue_scaled = std::numeric_limits<double>::quiet_NaN();
      s.lebesgue_stderr = std::numeric_limits<double>::quiet_NaN();
      if (c->d == 1 && c->lebesgue_draws > 0) {
        const LebesgueTail l = lebesgue_tail_d1(c->lebesgue_t, c->lebesgue_draws, c->seed);
        s.lebesgue_scaled = l.scaled;
        s.lebesgue_stderr = l.stderr_;
      }
    } catch (...) {
      delete t;
      throw;
    }
    *out = t;
  });
}

void bcf_tail_free(bcf_tail* t) { delete t; }

bcf_status bcf_tail_get_summary(const bcf_tail* t, bcf_tail_summary* out) {
  return guard([&] {
    need(t, "handle");
    need(out, "out");
    *out = t->summary;
  });
}

const char* bcf_tail_warning(const bcf_tail* t) { return t ? t->estimate.warning.c_str() : ""; }

size_t bcf_tail_threshold_count(const bcf_tail* t) { return t ? t->estimate.thresholds.size() : 0; }

bcf_status bcf_tail_threshold_at(const bcf_tail* t, size_t j, double* threshold, double* freq, double* scaled) {
  return guard([&] {
    need(t, "handle");
    if (j >= t->estimate.thresholds.size()) fail(ErrorKind::invalid_argument, "threshold index out of range");
    if (threshold) *threshold = t->estimate.thresholds[j];
    if (freq) *freq = t->estimate.tail_freq[j];
    if (scaled) *scaled = t->estimate.scaled[j];
  });
}

// --------------------------------------------------------------------------

bcf_status bcf_identity_suite(int d, uint64_t count, unsigned bits, uint64_t n_max, uint64_t seed, unsigned threads,
                              bcf_suite** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    *out = new bcf_suite{identity_suite(disc(d), count, bits, n_max, seed, threads)};
  });
}

bcf_status bcf_geometry_suite(int d, uint64_t count, uint64_t seed, unsigned threads, bcf_suite** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    *out = new bcf_suite{geometry_suite(disc(d), count, seed, threads)};
  });
}

void bcf_suite_free(bcf_suite* s) { delete s; }

size_t bcf_suite_check_count(const bcf_suite* s) { return s ? s->report.checks.size() : 0; }

bcf_status bcf_suite_check_at(const bcf_suite* s, size_t j, bcf_check* out) {
  return guard([&] {
    need(s, "handle");
    need(out, "out");
    if (j >= s->report.checks.size()) fail(ErrorKind::invalid_argument, "check index out of range");
    const CheckCount& c = s->report.checks[j];
    *out = {c.name.c_str(), c.trials, c.failures, c.worst};
  });
}

}  // extern "C"
