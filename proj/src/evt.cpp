#include "bianchi/evt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <thread>

#include "bianchi/error.hpp"
#include "bianchi/excursion.hpp"
#include "bianchi/extended.hpp"
#include "bianchi/hyperbolic.hpp"

namespace bianchi {

// ---------------------------------------------------------------------------
// Randomness and fan-out

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform on [0, 1) with 53 random bits.
double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

mpz_class random_bits(Rng& rng, unsigned bits) {
  const std::size_t words = (bits + 63) / 64;
  std::vector<std::uint64_t> buf(words);
  for (auto& w : buf) w = rng();
  mpz_class r;
  mpz_import(r.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0, buf.data());
  const unsigned extra = static_cast<unsigned>(words * 64 - bits);
  if (extra > 0) r >>= extra;
  return r;
}

// Stream identifiers keep the experiments' generators apart.
enum Stream : std::uint64_t {
  kStreamMaxima = 1,
  kStreamTail = 2,
  kStreamGalambos = 3,
  kStreamTheorem2 = 4,
  kStreamLebesgue = 5,
  kStreamExcursions = 6,
};

// Consecutive early terminations tolerated before a sample gives up.
constexpr std::size_t kMaxResamples = 1000;

void count_resample(std::size_t& counter, std::size_t& streak, const char* who) {
  ++counter;
  if (++streak >= kMaxResamples) fail(ErrorKind::not_converged, std::string(who) + ": expansions keep terminating early; raise the bit size");
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Rng sample_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  x ^= stream * 0xd1b54a32d192ed03ULL;
  std::uint64_t b = splitmix64(x);
  x ^= index * 0x8cb92ba72f3d8dd7ULL;
  std::uint64_t c = splitmix64(x);
  std::uint64_t e = splitmix64(x);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32), static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32)};
  return Rng(seq);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::size_t error_index = count;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        // Report the failure of the lowest index, as a serial run would.
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Sampling

double cell_box_half_height(Discriminant d) {
  const double root = std::sqrt(static_cast<double>(d.value()));
  if (!d.three_mod_four()) return root / 2;
  return (d.value() + 1) / (4.0 * root);
}

double cell_box_acceptance(Discriminant d) {
  if (!d.three_mod_four()) return 1.0;
  return static_cast<double>(d.value()) / (d.value() + 1);
}

std::complex<double> sample_uniform_cell(Discriminant d, Rng& rng, std::size_t* rejected) {
  const double h = cell_box_half_height(d);
  for (;;) {
    const std::complex<double> z(uniform01(rng) - 0.5, (2 * uniform01(rng) - 1) * h);
    if (in_cell(z, d)) return z;
    if (rejected) ++*rejected;
  }
}

FieldElement sample_exact_cell(Discriminant d, unsigned bits, Rng& rng) {
  if (bits < 8) fail(ErrorKind::invalid_argument, "sample_exact_cell: need at least 8 bits");
  const mpz_class scale = mpz_class(1) << bits;
  // Half-height of the box in units of sqrt(d).
  const mpq_class h = d.three_mod_four() ? mpq_class(d.value() + 1, 4 * d.value()) : mpq_class(1, 2);
  for (;;) {
    mpq_class x(random_bits(rng, bits), scale);
    x.canonicalize();
    x -= mpq_class(1, 2);
    mpq_class v(random_bits(rng, bits), scale);
    v.canonicalize();
    const mpq_class y = (2 * v - 1) * h;  // imaginary part / sqrt(d)
    // x + i sqrt(d) y = s + t w
    const mpq_class t = d.three_mod_four() ? mpq_class(2 * y) : y;
    const mpq_class s = d.three_mod_four() ? mpq_class(x + y) : x;
    FieldElement z = FieldElement::from_coordinates(d, s, t);
    if (in_cell(z)) return z;
  }
}

unsigned bits_for_digits(std::size_t n) {
  // log|q_n| grows by at most ~1.2 nats per digit; leave 20% plus a few
  // standard deviations of headroom.
  const double nats = 1.2 * 1.2 * static_cast<double>(n) + 10.0 * std::sqrt(static_cast<double>(n));
  return static_cast<unsigned>(std::ceil(nats / std::numbers::ln2)) + 64;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) fail(ErrorKind::precondition, "ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::precondition, "ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (i == a.size()) {
      v = b[j];
    } else if (j == b.size()) {
      v = a[i];
    } else {
      v = std::min(a[i], b[j]);
    }
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double frechet_cdf(double y) { return y <= 0 ? 0.0 : std::exp(-1.0 / (y * y)); }

double poisson_k_cdf(double y, unsigned k) {
  if (y <= 0) return 0.0;
  const double tau = 1.0 / (y * y);
  double term = 1.0;
  double sum = 0.0;
  for (unsigned j = 0; j < k; ++j) {
    sum += term;
    term *= tau / static_cast<double>(j + 1);
  }
  return std::exp(-tau) * sum;
}

double galambos_cdf(double y) { return y <= 0 ? 0.0 : std::exp(-1.0 / y); }

double minimize_scalar(const std::function<double(double)>& f, double lo, double hi, std::size_t grid) {
  double best_x = lo;
  double best_f = f(lo);
  const double step = (hi - lo) / static_cast<double>(grid);
  for (std::size_t i = 1; i <= grid; ++i) {
    const double x = lo + step * static_cast<double>(i);
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - step);
  double b = std::min(hi, best_x + step);
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 60; ++it) {
    const double c = b - phi * (b - a);
    const double e = a + phi * (b - a);
    const double fc = f(c);
    const double fe = f(e);
    if (fc < best_f) {
      best_f = fc;
      best_x = c;
    }
    if (fe < best_f) {
      best_f = fe;
      best_x = e;
    }
    if (fc <= fe) {
      b = e;
    } else {
      a = c;
    }
  }
  return best_x;
}

// ---------------------------------------------------------------------------
// Tail constant

std::vector<double> default_thresholds() { return {10, 12.5, 15, 17.5, 20, 25, 30, 35, 40, 50, 60, 70, 80, 90, 100}; }

TailEstimate estimate_tail_constant(Discriminant d, std::size_t length, const std::vector<double>& thresholds,
                                    std::uint64_t seed, const TailOptions& opt) {
  if (length == 0) fail(ErrorKind::invalid_argument, "estimate_tail_constant: empty orbit");
  if (thresholds.empty()) fail(ErrorKind::invalid_argument, "estimate_tail_constant: no thresholds");
  if (opt.chunk_length == 0) fail(ErrorKind::invalid_argument, "estimate_tail_constant: chunk length must be positive");
  const std::size_t chunks = (length + opt.chunk_length - 1) / opt.chunk_length;
  const std::size_t T = thresholds.size();
  std::vector<double> t2(T);
  for (std::size_t j = 0; j < T; ++j) t2[j] = thresholds[j] * thresholds[j];
  std::vector<std::vector<std::uint32_t>> counts(chunks, std::vector<std::uint32_t>(T, 0));
  std::vector<std::size_t> lengths(chunks);
  std::vector<std::size_t> restarts(chunks, 0);
  const unsigned bits = bits_for_digits(opt.burn_in + opt.chunk_length);

  parallel_for(chunks, opt.threads, [&](std::size_t c) {
    const std::size_t len = std::min(opt.chunk_length, length - c * opt.chunk_length);
    lengths[c] = len;
    Rng rng = sample_rng(seed, kStreamTail, c);
    std::size_t streak = 0;
    for (;;) {
      ExactOrbit orbit(sample_exact_cell(d, bits, rng));
      std::vector<std::uint32_t> local(T, 0);
      bool ok = true;
      for (std::size_t n = 0; n < opt.burn_in + len; ++n) {
        if (!orbit.advance()) {
          ok = false;
          break;
        }
        if (n < opt.burn_in) continue;
        const double a = orbit.digit_abs();
        const double a2 = a * a;
        for (std::size_t j = 0; j < T; ++j) {
          if (a2 > t2[j]) ++local[j];
        }
      }
      if (ok) {
        counts[c] = std::move(local);
        return;
      }
      count_resample(restarts[c], streak, "estimate_tail_constant");
    }
  });

  TailEstimate out;
  out.d = d.value();
  out.length = length;
  out.thresholds = thresholds;
  out.chunks = chunks;
  out.restarts = std::accumulate(restarts.begin(), restarts.end(), std::size_t{0});
  std::vector<double> total(T, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t j = 0; j < T; ++j) total[j] += counts[c][j];
  }
  for (std::size_t j = 0; j < T; ++j) {
    out.tail_freq.push_back(total[j] / static_cast<double>(length));
    out.scaled.push_back(t2[j] * out.tail_freq.back());
  }
  out.h_hat = std::accumulate(out.scaled.begin(), out.scaled.end(), 0.0) / static_cast<double>(T);

  // Batch means over contiguous groups of chunks.
  const std::size_t B = std::min(opt.batches, chunks);
  if (B >= 2) {
    std::vector<double> hb;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t c0 = b * chunks / B;
      const std::size_t c1 = (b + 1) * chunks / B;
      std::vector<double> cnt(T, 0.0);
      double len = 0;
      for (std::size_t c = c0; c < c1; ++c) {
        len += static_cast<double>(lengths[c]);
        for (std::size_t j = 0; j < T; ++j) cnt[j] += counts[c][j];
      }
      double h = 0;
      for (std::size_t j = 0; j < T; ++j) h += t2[j] * cnt[j] / len;
      hb.push_back(h / static_cast<double>(T));
    }
    const double mean = std::accumulate(hb.begin(), hb.end(), 0.0) / static_cast<double>(B);
    double ss = 0;
    for (double h : hb) ss += (h - mean) * (h - mean);
    out.h_stderr = std::sqrt(ss / static_cast<double>(B - 1) / static_cast<double>(B));
  }

  double lo = HUGE_VAL;
  double hi = -HUGE_VAL;
  double sum = 0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < T; ++j) {
    if (thresholds[j] < 10 || thresholds[j] > 100) continue;
    lo = std::min(lo, out.scaled[j]);
    hi = std::max(hi, out.scaled[j]);
    sum += out.scaled[j];
    ++k;
  }
  if (k == 0) {
    for (double s : out.scaled) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      sum += s;
      ++k;
    }
  }
  out.plateau_spread = sum > 0 ? (hi - lo) / (sum / static_cast<double>(k)) : HUGE_VAL;
  out.flat = out.plateau_spread <= 0.25;
  if (!out.flat) out.warning = "t^2 tail frequency is not flat (relative spread above 25%)";
  if (!(out.h_hat > 0)) out.warning = "no digits above the thresholds";
  return out;
}

LebesgueTail lebesgue_tail_d1(double t, std::size_t draws, std::uint64_t seed) {
  if (!(t > 2)) fail(ErrorKind::invalid_argument, "lebesgue_tail_d1: threshold must exceed 2");
  if (draws == 0) fail(ErrorKind::invalid_argument, "lebesgue_tail_d1: no draws");
  const Discriminant d(1);
  const double R = 1.0 / (t - 1.0);
  Rng rng = sample_rng(seed, kStreamLebesgue, static_cast<std::uint64_t>(t * 1000));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double rad = R * std::sqrt(uniform01(rng));
    const double ang = 2 * std::numbers::pi * uniform01(rng);
    const std::complex<double> z = std::polar(rad, ang);
    if (z == std::complex<double>(0, 0)) {
      ++hits;
      continue;
    }
    const RingElement a = nearest_lattice_point(1.0 / z, d);
    if (a.norm().get_d() > t * t) ++hits;
  }
  const double f = static_cast<double>(hits) / static_cast<double>(draws);
  const double area = std::numbers::pi * R * R;  // lambda(K_1) = 1
  LebesgueTail out;
  out.t = t;
  out.scaled = t * t * f * area;
  out.stderr_ = t * t * area * std::sqrt(f * (1 - f) / static_cast<double>(draws));
  return out;
}

// ---------------------------------------------------------------------------
// Digit maxima

MaxDigitSample max_digit_experiment(Discriminant d, std::size_t N, std::size_t M, std::uint64_t seed, unsigned k,
                                    unsigned bits, unsigned threads) {
  if (N == 0 || M == 0) fail(ErrorKind::invalid_argument, "max_digit_experiment: N and M must be positive");
  if (k == 0) fail(ErrorKind::invalid_argument, "max_digit_experiment: k must be positive");
  MaxDigitSample s;
  s.d = d.value();
  s.N = N;
  s.M = M;
  s.k = k;
  s.seed = seed;
  s.bits = bits == 0 ? bits_for_digits(N) : bits;
  s.maxima.assign(M, 0.0);
  s.k_maxima.assign(k, std::vector<double>(M, 0.0));
  std::vector<std::size_t> resampled(M, 0);
  parallel_for(M, threads, [&](std::size_t i) {
    Rng rng = sample_rng(seed, kStreamMaxima, i);
    std::size_t streak = 0;
    for (;;) {
      ExactOrbit orbit(sample_exact_cell(d, s.bits, rng));
      std::vector<double> top(k, 0.0);  // descending
      bool ok = true;
      for (std::size_t n = 0; n < N; ++n) {
        if (!orbit.advance()) {
          ok = false;
          break;
        }
        const double a = orbit.digit_abs();
        if (a > top.back()) {
          top.back() = a;
          for (std::size_t j = k - 1; j > 0 && top[j] > top[j - 1]; --j) std::swap(top[j], top[j - 1]);
        }
      }
      if (ok) {
        s.maxima[i] = top[0];
        for (unsigned j = 0; j < k; ++j) s.k_maxima[j][i] = top[j];
        return;
      }
      count_resample(resampled[i], streak, "max_digit_experiment");
    }
  });
  s.resampled = std::accumulate(resampled.begin(), resampled.end(), std::size_t{0});
  return s;
}

FitReport frechet_fit(const MaxDigitSample& s, std::optional<double> C) {
  if (s.maxima.empty()) fail(ErrorKind::precondition, "frechet_fit: empty sample");
  const double root = std::sqrt(static_cast<double>(s.N));
  auto ks_for = [&](double c) {
    std::vector<double> y(s.maxima.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = s.maxima[i] / (c * root);
    return ks_statistic(std::move(y), frechet_cdf);
  };
  FitReport r;
  r.reference = ReferenceCdf::frechet_sq;
  if (C) {
    if (!(*C > 0)) fail(ErrorKind::invalid_argument, "frechet_fit: scale must be positive");
    r.fitted_scale = *C;
    r.ks_distance = ks_for(*C);
    return r;
  }
  // Median of exp(-1/y^2) is 1/sqrt(log 2).
  std::vector<double> sorted = s.maxima;
  const double med = quantile(sorted, 0.5);
  const double c0 = med * std::sqrt(std::numbers::ln2) / root;
  if (!(c0 > 0)) fail(ErrorKind::numeric, "frechet_fit: degenerate sample");
  const double lc = minimize_scalar([&](double x) { return ks_for(std::exp(x)); }, std::log(c0) - 0.7, std::log(c0) + 0.7);
  r.fitted_scale = std::exp(lc);
  r.ks_distance = ks_for(r.fitted_scale);
  return r;
}

FitReport poisson_k_fit(const MaxDigitSample& s, unsigned k, double C) {
  if (k == 0 || k > s.k_maxima.size()) fail(ErrorKind::precondition, "poisson_k_fit: k-th maxima not recorded");
  if (!(C > 0)) fail(ErrorKind::invalid_argument, "poisson_k_fit: scale must be positive");
  const double root = std::sqrt(static_cast<double>(s.N));
  std::vector<double> y(s.k_maxima[k - 1].size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s.k_maxima[k - 1][i] / (C * root);
  FitReport r;
  r.reference = k == 1 ? ReferenceCdf::frechet_sq : ReferenceCdf::poisson_k;
  r.fitted_scale = C;
  r.ks_distance = ks_statistic(std::move(y), [k](double v) { return poisson_k_cdf(v, k); });
  return r;
}

// ---------------------------------------------------------------------------
// Regular continued fractions

namespace {

// x = p / q in (0, 1); reciprocal-floor digits with the quotient guessed in
// double precision and confirmed exactly near integers.
class RealOrbit {
 public:
  RealOrbit(mpz_class p, mpz_class q) : p_(std::move(p)), q_(std::move(q)) {}

  bool finished() const { return sgn(p_) == 0; }

  // Advances and returns the digit as a double; the exact digit goes to *exact
  // when requested.
  bool advance(double& digit, mpz_class* exact = nullptr) {
    if (finished()) return false;
    long ep = 0;
    long eq = 0;
    const double mp = mpz_get_d_2exp(&ep, p_.get_mpz_t());
    const double mq = mpz_get_d_2exp(&eq, q_.get_mpz_t());
    const long e = eq - ep;
    bool fast = false;
    unsigned long a = 0;
    if (e < 50) {
      const double r = std::ldexp(mq / mp, static_cast<int>(e));
      const double fl = std::floor(r);
      const double frac = r - fl;
      if (frac > 1e-9 * r && 1.0 - frac > 1e-9 * r && fl >= 1) {
        a = static_cast<unsigned long>(fl);
        fast = true;
      }
    }
    if (fast) {
      mpz_submul_ui(q_.get_mpz_t(), p_.get_mpz_t(), a);
      digit = static_cast<double>(a);
      if (exact) *exact = a;
    } else {
      mpz_class big;
      mpz_fdiv_qr(big.get_mpz_t(), q_.get_mpz_t(), q_.get_mpz_t(), p_.get_mpz_t());
      digit = big.get_d();
      if (exact) *exact = big;
    }
    swap(p_, q_);
    return true;
  }

 private:
  mpz_class p_, q_;  // x = p / q
};

}  // namespace

mpq_class sample_gauss_measure(Rng& rng, unsigned bits) {
  if (bits < 64) fail(ErrorKind::invalid_argument, "sample_gauss_measure: need at least 64 bits");
  for (;;) {
    const double x = std::exp2(uniform01(rng)) - 1.0;
    const auto hi = static_cast<std::uint64_t>(std::ldexp(x, 62));
    mpz_class X = mpz_class(static_cast<unsigned long>(hi)) << (bits - 62);
    X += random_bits(rng, bits - 62);
    if (sgn(X) == 0) continue;
    mpq_class q(X, mpz_class(1) << bits);
    q.canonicalize();
    return q;
  }
}

std::vector<mpz_class> regular_cf_digits(const mpq_class& x, std::size_t n) {
  if (!(sgn(x) > 0 && x < 1)) fail(ErrorKind::precondition, "regular_cf_digits: x must lie in (0, 1)");
  RealOrbit orbit(x.get_num(), x.get_den());
  std::vector<mpz_class> out;
  double a = 0;
  mpz_class exact;
  while (out.size() < n && orbit.advance(a, &exact)) out.push_back(exact);
  return out;
}

GalambosResult galambos_baseline(std::size_t N, std::size_t M, std::uint64_t seed, unsigned bits, unsigned threads) {
  if (N == 0 || M == 0) fail(ErrorKind::invalid_argument, "galambos_baseline: N and M must be positive");
  const unsigned b = bits == 0 ? bits_for_digits(N) : bits;
  GalambosResult out;
  out.N = N;
  out.M = M;
  out.scaled_maxima.assign(M, 0.0);
  std::vector<char> first_one(M, 0);
  std::vector<double> xs(M, 0.0);
  std::vector<std::size_t> resampled(M, 0);
  parallel_for(M, threads, [&](std::size_t i) {
    Rng rng = sample_rng(seed, kStreamGalambos, i);
    std::size_t streak = 0;
    for (;;) {
      const mpq_class x = sample_gauss_measure(rng, b);
      RealOrbit orbit(x.get_num(), x.get_den());
      double best = 0;
      double a = 0;
      bool ok = true;
      for (std::size_t n = 0; n < N; ++n) {
        if (!orbit.advance(a)) {
          ok = false;
          break;
        }
        if (n == 0) first_one[i] = a == 1.0;
        best = std::max(best, a);
      }
      if (ok) {
        out.scaled_maxima[i] = best * std::numbers::ln2 / static_cast<double>(N);
        xs[i] = x.get_d();
        return;
      }
      count_resample(resampled[i], streak, "galambos_baseline");
    }
  });
  out.resampled = std::accumulate(resampled.begin(), resampled.end(), std::size_t{0});
  out.fit.reference = ReferenceCdf::frechet_real;
  out.fit.fitted_scale = 1.0;
  out.fit.ks_distance = ks_statistic(out.scaled_maxima, galambos_cdf);
  out.p_first_digit_one = static_cast<double>(std::count(first_one.begin(), first_one.end(), 1)) / static_cast<double>(M);
  // Equal-mass bins of the Gauss measure: edges 2^{j/20} - 1.
  constexpr int kBins = 20;
  std::vector<double> hist(kBins, 0.0);
  for (double x : xs) {
    const int j = std::clamp(static_cast<int>(std::floor(std::log2(1.0 + x) * kBins)), 0, kBins - 1);
    hist[static_cast<std::size_t>(j)] += 1;
  }
  const double expect = static_cast<double>(M) / kBins;
  for (double h : hist) out.sampler_chi2 += (h - expect) * (h - expect) / expect;
  return out;
}

// ---------------------------------------------------------------------------
// Cusp excursions

std::vector<ExcursionTrace> excursion_batch(Discriminant d, std::size_t N, std::size_t M, std::uint64_t seed,
                                            unsigned bits, unsigned threads, std::size_t* resampled) {
  if (N == 0 || M == 0) fail(ErrorKind::invalid_argument, "excursion_batch: N and M must be positive");
  const unsigned b = bits == 0 ? bits_for_digits(N + 1) : bits;
  std::vector<std::optional<ExcursionTrace>> traces(M);
  std::vector<std::size_t> redraws(M, 0);
  parallel_for(M, threads, [&](std::size_t i) {
    Rng rng = sample_rng(seed, kStreamExcursions, i);
    std::size_t streak = 0;
    for (;;) {
      ExcursionTrace tr = build_trace(sample_exact_cell(d, b, rng), N);
      // One extra digit keeps log|G^N(beta)| finite.
      if (tr.records.size() == N && tr.records.back().log_abs_iterate > -HUGE_VAL) {
        traces[i] = std::move(tr);
        return;
      }
      count_resample(redraws[i], streak, "excursion_batch");
    }
  });
  if (resampled) *resampled = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  std::vector<ExcursionTrace> out;
  out.reserve(M);
  for (auto& t : traces) out.push_back(std::move(*t));
  return out;
}

double direct_max_height(const FieldElement& beta, double t_max, double dt, std::size_t* capped) {
  if (!(dt > 0) || !(t_max >= 0)) fail(ErrorKind::invalid_argument, "direct_max_height: bad time grid");
  const Discriminant d = beta.disc();
  // Pulling beta + e^{-t} j back near the domain cancels about 2 log2 |c|
  // bits, and |c| grows like e^{t/2}.
  PrecisionScope scope(static_cast<unsigned>(std::ceil(2.0 * t_max / std::numbers::ln2)) + 128);
  const auto [bx, by] = embed_as<ExtReal>(beta);
  MobiusMap W = MobiusMap::identity(d);
  double best = 0;
  const auto steps = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const BasicH3Point<ExtReal> p{bx, by, ExtReal(exp(ExtReal(-t)))};
    const auto red = reduce_to_domain(act(W, p), d);
    if (red.capped && capped) ++*capped;
    if (!red.word.empty()) W = word_to_map(red.word, d) * W;
    best = std::max(best, red.point.r.convert_to<double>());
  }
  return best;
}

Theorem2Result theorem2_experiment(Discriminant d, double T, std::size_t M, std::uint64_t seed,
                                   const Theorem2Options& opt) {
  if (!(T > 0) || M == 0) fail(ErrorKind::invalid_argument, "theorem2_experiment: T and M must be positive");
  if (!(opt.c_d > 0)) fail(ErrorKind::precondition, "theorem2_experiment: needs the Frechet scale C_d");
  const std::size_t direct = std::min(opt.direct_count, M);
  const double T4 = 4 * T;
  const double Td = opt.direct_T;
  // t*_n grows like C* n with C* well above 1.5 for every d.
  const unsigned bits =
      opt.bits == 0 ? bits_for_digits(static_cast<std::size_t>(std::ceil(std::max(T4, Td) / 1.5)) + 64) : opt.bits;

  Theorem2Result out;
  out.T = T;
  out.M = M;
  out.c_d = opt.c_d;
  std::vector<double> apex_T(M), apex_4T(M), apex_d(M), cstar(M);
  std::vector<std::size_t> resampled(M, 0);
  std::vector<std::optional<FieldElement>> betas(direct);

  parallel_for(M, opt.threads, [&](std::size_t i) {
    Rng rng = sample_rng(seed, kStreamTheorem2, i);
    std::size_t streak = 0;
    for (;;) {
      const FieldElement beta = sample_exact_cell(d, bits, rng);
      ExactOrbit orbit(beta, true);
      double best_apex = 0;
      double t_star = -HUGE_VAL;
      bool got_T = false;
      bool got_d = direct == 0 || i >= direct;
      bool ok = false;
      while (orbit.advance()) {
        const std::complex<double> rho = orbit.q_ratio();
        double gap = std::norm(rho) - 1.0;
        if (gap < 1e-6) {
          const RingElement q = orbit.q();
          const RingElement qp = orbit.q_prev();
          mpq_class g(q.norm() - qp.norm(), qp.norm());
          g.canonicalize();
          gap = g.get_d();
        }
        const StepGeometry geo =
            step_geometry(orbit.iterate_approx(), rho, orbit.log_abs_q_prev(), orbit.index(), gap);
        t_star = std::max(t_star, geo.t_n);
        best_apex = std::max(best_apex, geo.apex_height);
        if (!got_d && t_star > Td) {
          apex_d[i] = best_apex;
          got_d = true;
        }
        if (!got_T && t_star > T) {
          apex_T[i] = best_apex;
          got_T = true;
        }
        if (t_star > T4) {
          apex_4T[i] = best_apex;
          cstar[i] = t_star / static_cast<double>(orbit.index());
          ok = got_d;
          break;
        }
      }
      if (ok) {
        if (i < direct) betas[i] = beta;
        return;
      }
      count_resample(resampled[i], streak, "theorem2_experiment");
    }
  });
  out.resampled = std::accumulate(resampled.begin(), resampled.end(), std::size_t{0});
  out.c_star = std::accumulate(cstar.begin(), cstar.end(), 0.0) / static_cast<double>(M);
  out.alpha_hat = std::log(opt.c_d / (2.0 * std::sqrt(out.c_star)));
  const double half_log = 0.5 * std::log(T);
  const double half_log4 = 0.5 * std::log(T4);
  for (std::size_t i = 0; i < M; ++i) {
    out.stat_T.push_back(std::log(apex_T[i]) - half_log);
    out.stat_4T.push_back(std::log(apex_4T[i]) - half_log4);
  }
  auto ks_at = [&](double alpha) {
    std::vector<double> y(M);
    for (std::size_t i = 0; i < M; ++i) y[i] = std::exp(out.stat_T[i] - alpha);
    return ks_statistic(std::move(y), frechet_cdf);
  };
  out.ks_distance = ks_at(out.alpha_hat);
  out.alpha_fitted = minimize_scalar(ks_at, out.alpha_hat - 1.5, out.alpha_hat + 1.5, 600);
  out.ks_fitted = ks_at(out.alpha_fitted);
  out.ks_T_vs_4T = ks_two_sample(out.stat_T, out.stat_4T);

  out.direct.t_max = Td;
  out.direct.dt = opt.direct_dt;
  if (direct > 0) {
    std::vector<double> gaps(direct);
    std::vector<std::size_t> capped(direct, 0);
    parallel_for(direct, opt.threads, [&](std::size_t i) {
      const double h = direct_max_height(*betas[i], Td, opt.direct_dt, &capped[i]);
      gaps[i] = std::log(h) - std::log(apex_d[i]);
    });
    out.direct.gaps = gaps;
    out.direct.capped = std::accumulate(capped.begin(), capped.end(), std::size_t{0});
    std::vector<double> abs_gaps;
    for (double g : gaps) abs_gaps.push_back(std::abs(g));
    out.direct.p95_abs_gap = quantile(abs_gaps, 0.95);
  }
  return out;
}

}  // namespace bianchi
