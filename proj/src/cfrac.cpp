#include "bianchi/cfrac.hpp"

#include <array>
#include <climits>
#include <cmath>

#include "bianchi/error.hpp"

namespace bianchi {

// ---------------------------------------------------------------------------
// Cell membership

namespace {

// Half-widths of the cell in its defining inequalities:
//   d = 1, 2:       |x| < 1/2, |y| < sqrt(d)/2
//   d = 3, 7, 11:   |x| < 1/2, |x +- y sqrt(d)| < (d + 1)/4
bool cell_test(double x, double y, Discriminant d, double tol, bool strict) {
  auto within = [&](double v, double bound) { return strict ? v < bound + tol : v <= bound + tol; };
  if (!within(std::abs(x), 0.5)) return false;
  const double root = std::sqrt(static_cast<double>(d.value()));
  if (!d.three_mod_four()) return within(std::abs(y), root / 2);
  const double bound = (d.value() + 1) / 4.0;
  return within(std::abs(x - y * root), bound) && within(std::abs(x + y * root), bound);
}

bool exact_cell_test(const FieldElement& z, bool strict) {
  const Discriminant d = z.disc();
  const mpq_class x = abs(z.real_part());
  const mpq_class yr = z.imag_over_sqrt_d();  // y / sqrt(d)
  auto within = [&](const mpq_class& v, const mpq_class& bound) {
    const int c = cmp(v, bound);
    return strict ? c < 0 : c <= 0;
  };
  const mpq_class half(1, 2);
  if (!within(x, half)) return false;
  if (!d.three_mod_four()) return within(mpq_class(abs(yr)), half);
  // x +- y sqrt(d) = x +- d * (y / sqrt(d)), all rational.
  const mpq_class bound(d.value() + 1, 4);
  const mpq_class re = z.real_part();
  const mpq_class shift = d.value() * yr;
  return within(mpq_class(abs(re - shift)), bound) && within(mpq_class(abs(re + shift)), bound);
}

}  // namespace

bool in_cell(std::complex<double> z, Discriminant d) { return cell_test(z.real(), z.imag(), d, 0.0, true); }

bool in_cell(const FieldElement& z) { return exact_cell_test(z, true); }

bool in_cell_closure(std::complex<double> z, Discriminant d, double tol) {
  return cell_test(z.real(), z.imag(), d, tol, false);
}

bool in_cell_closure(const FieldElement& z) { return exact_cell_test(z, false); }

// ---------------------------------------------------------------------------
// Gauss step

std::optional<GaussStep> gauss_step(const FieldElement& z) {
  if (z.is_zero()) return std::nullopt;
  const FieldElement w = z.inverse();
  RingElement digit = nearest_lattice_point(w);
  FieldElement next = w - FieldElement(digit);
  return GaussStep{std::move(digit), std::move(next)};
}

std::optional<FloatGaussStep> gauss_step(std::complex<double> z, Discriminant d) {
  if (z == std::complex<double>(0.0, 0.0)) return std::nullopt;
  const std::complex<double> w = 1.0 / z;
  RingElement digit = nearest_lattice_point(w, d);
  const std::complex<double> next = w - digit.to_complex();
  return FloatGaussStep{std::move(digit), next};
}

// ---------------------------------------------------------------------------
// Expansion

Expansion::Expansion(Discriminant d, Beta beta) : d_(d), beta_(std::move(beta)) {
  p_ = {RingElement(d, 0, 0), RingElement(d, 1, 0), RingElement(d, 0, 0)};
  q_ = {RingElement(d, 1, 0), RingElement(d, 0, 0), RingElement(d, 1, 0)};
}

void Expansion::push_digit(RingElement a) {
  const std::size_t k = p_.size();
  p_.push_back(a * p_[k - 1] + p_[k - 2]);
  q_.push_back(a * q_[k - 1] + q_[k - 2]);
  digits_.push_back(std::move(a));
}

const FieldElement& Expansion::exact_beta() const {
  if (!is_exact()) fail(ErrorKind::precondition, "expansion was computed in floating mode");
  return std::get<FieldElement>(beta_);
}

const RingElement& Expansion::digit(std::size_t n) const {
  if (n < 1 || n > digits_.size()) fail(ErrorKind::precondition, "digit index out of range");
  return digits_[n - 1];
}

const RingElement& Expansion::p(long n) const {
  if (n < -2 || n > static_cast<long>(digits_.size())) fail(ErrorKind::precondition, "convergent index out of range");
  return p_[static_cast<std::size_t>(n + 2)];
}

const RingElement& Expansion::q(long n) const {
  if (n < -2 || n > static_cast<long>(digits_.size())) fail(ErrorKind::precondition, "convergent index out of range");
  return q_[static_cast<std::size_t>(n + 2)];
}

FieldElement Expansion::iterate(std::size_t n) const {
  if (!is_exact()) fail(ErrorKind::precondition, "exact iterate of a floating expansion");
  if (n >= remainders_.size()) fail(ErrorKind::precondition, "iterate index out of range");
  return FieldElement(remainders_[n].first, remainders_[n].second);
}

std::complex<double> Expansion::iterate_approx(std::size_t n) const {
  if (is_exact()) {
    if (n >= remainders_.size()) fail(ErrorKind::precondition, "iterate index out of range");
    const auto& [u, v] = remainders_[n];
    if (u.is_zero()) return {0.0, 0.0};
    return ratio_approx(u, v);
  }
  if (n >= float_iterates_.size()) fail(ErrorKind::precondition, "iterate index out of range");
  return float_iterates_[n];
}

Expansion expand(const FieldElement& beta, std::size_t max_digits) {
  if (!in_cell_closure(beta)) fail(ErrorKind::precondition, "expand: beta lies outside the closed cell");
  const Discriminant d = beta.disc();
  Expansion e(d, beta);
  RingElement u = beta.numerator();
  RingElement v = beta.denominator();
  e.remainders_.emplace_back(u, v);
  while (e.size() < max_digits) {
    if (u.is_zero()) break;
    RingElement a = nearest_lattice_point(v, u);
    RingElement next = v - a * u;
    v = std::move(u);
    u = std::move(next);
    e.push_digit(std::move(a));
    e.remainders_.emplace_back(u, v);
  }
  e.terminated_ = u.is_zero();
  return e;
}

Expansion expand(std::complex<double> beta, Discriminant d, std::size_t max_digits) {
  if (!in_cell_closure(beta, d, kFloatCellTolerance)) {
    fail(ErrorKind::precondition, "expand: beta lies outside the closed cell");
  }
  Expansion e(d, beta);
  std::complex<double> z = beta;
  e.float_iterates_.push_back(z);
  while (e.size() < max_digits) {
    auto step = gauss_step(z, d);
    if (!step) break;
    z = step->next;
    e.push_digit(std::move(step->digit));
    e.float_iterates_.push_back(z);
    if (!e.precision_loss_ && !in_cell_closure(z, d, kFloatCellTolerance)) {
      e.precision_loss_ = true;
      e.precision_loss_step_ = e.size();
    }
  }
  e.terminated_ = z == std::complex<double>(0.0, 0.0);
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

FieldElement evaluate(std::span<const RingElement> digits, Discriminant d, bool check_admissible) {
  // tail = num / den, starting from the empty tail 0.
  RingElement num(d, 0, 0);
  RingElement den(d, 1, 0);
  for (std::size_t k = digits.size(); k-- > 0;) {
    RingElement next = digits[k] * den + num;
    if (next.is_zero()) fail(ErrorKind::division_by_zero, "evaluate: vanishing denominator at digit " + std::to_string(k + 1));
    num = std::move(den);
    den = std::move(next);
    if (check_admissible && !in_cell_closure(FieldElement(num, den))) {
      fail(ErrorKind::precondition, "evaluate: inadmissible digit string at digit " + std::to_string(k + 1));
    }
  }
  return FieldElement(num, den);
}

FieldElement evaluate_with_leading(const RingElement& leading, std::span<const RingElement> digits) {
  const Discriminant d = leading.disc();
  const FieldElement tail = evaluate(digits, d, false);
  return FieldElement(leading) + tail;
}

mpq_class approximation_defect(const Expansion& expansion, std::size_t n) {
  const FieldElement& beta = expansion.exact_beta();
  if (n + 1 > expansion.size()) {
    fail(ErrorKind::precondition, "approximation_defect: needs digit " + std::to_string(n + 1) + " of " +
                                      std::to_string(expansion.size()));
  }
  const long k = static_cast<long>(n);
  const RingElement& qn = expansion.q(k);
  const RingElement& qn1 = expansion.q(k + 1);
  // beta q_n - p_n = X / D
  const RingElement x = qn * beta.numerator() - expansion.p(k) * beta.denominator();
  // G^{n+1} + q_{n+1}/q_n = (u q_n + v q_{n+1}) / (v q_n) for G^{n+1} = u / v
  const FieldElement g = expansion.iterate(n + 1);
  const RingElement& u = g.numerator();
  const RingElement v = g.denominator();
  const RingElement y = u * qn + v * qn1;
  const mpz_class& den = beta.denominator_integer();
  mpq_class r(x.norm() * y.norm(), den * den * v.norm());
  r.canonicalize();
  return r;
}

// ---------------------------------------------------------------------------
// Floating approximations of large ring elements

namespace {

ScaledComplex scaled_pair(const mpz_class& n, const mpz_class& m, Discriminant d) {
  long en = 0;
  long em = 0;
  double mn = sgn(n) != 0 ? mpz_get_d_2exp(&en, n.get_mpz_t()) : 0.0;
  double mm = sgn(m) != 0 ? mpz_get_d_2exp(&em, m.get_mpz_t()) : 0.0;
  long e = 0;
  if (sgn(n) == 0) {
    e = em;
  } else if (sgn(m) == 0) {
    e = en;
  } else {
    e = std::max(en, em);
  }
  mn = std::ldexp(mn, static_cast<int>(std::max(en - e, -2000L)));
  mm = std::ldexp(mm, static_cast<int>(std::max(em - e, -2000L)));
  return {{mn + mm * d.omega_re(), mm * d.omega_im()}, e};
}

std::complex<double> scale(std::complex<double> z, long e) {
  const int k = static_cast<int>(std::clamp(e, -4000L, 4000L));
  return {std::ldexp(z.real(), k), std::ldexp(z.imag(), k)};
}

void addmul_si(mpz_class& r, const mpz_class& x, long c) {
  if (c >= 0) {
    mpz_addmul_ui(r.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(c));
  } else {
    mpz_submul_ui(r.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(-c));
  }
}

// r += (an + am w) * x for small digit coordinates.
void add_digit_times(mpz_class& rn, mpz_class& rm, long an, long am, const mpz_class& xn, const mpz_class& xm,
                     Discriminant d) {
  // (an + am w)(xn + xm w) = an xn - am xm nm + (an xm + am xn + am xm tr) w
  addmul_si(rn, xn, an);
  addmul_si(rn, xm, -am * d.omega_norm());
  addmul_si(rm, xm, an + am * d.omega_trace());
  addmul_si(rm, xn, am);
}

constexpr long kSmallDigit = 1L << 40;

}  // namespace

ScaledComplex scaled_approx(const RingElement& x) { return scaled_pair(x.n(), x.m(), x.disc()); }

double log_abs(const RingElement& x) {
  if (x.is_zero()) fail(ErrorKind::precondition, "log_abs of zero");
  const ScaledComplex s = scaled_approx(x);
  return std::log(std::abs(s.mantissa)) + static_cast<double>(s.exponent) * std::log(2.0);
}

std::complex<double> ratio_approx(const RingElement& x, const RingElement& y) {
  if (y.is_zero()) fail(ErrorKind::division_by_zero, "ratio_approx: zero denominator");
  if (x.is_zero()) return {0.0, 0.0};
  const ScaledComplex a = scaled_approx(x);
  const ScaledComplex b = scaled_approx(y);
  return scale(a.mantissa / b.mantissa, a.exponent - b.exponent);
}

// ---------------------------------------------------------------------------
// ExactOrbit

ExactOrbit::ExactOrbit(const FieldElement& beta, bool track_denominators)
    : d_(beta.disc()), digit_(beta.disc()), track_(track_denominators) {
  if (!in_cell_closure(beta)) fail(ErrorKind::precondition, "ExactOrbit: beta lies outside the closed cell");
  un_ = beta.numerator().n();
  um_ = beta.numerator().m();
  vn_ = beta.denominator_integer();
  vm_ = 0;
  if (track_) {
    qn_ = 1;
    qm_ = 0;
    qpn_ = 0;
    qpm_ = 0;
  }
}

bool ExactOrbit::finished() const { return sgn(un_) == 0 && sgn(um_) == 0; }

std::complex<double> ExactOrbit::iterate_approx() const {
  if (finished()) return {0.0, 0.0};
  const ScaledComplex a = scaled_pair(un_, um_, d_);
  const ScaledComplex b = scaled_pair(vn_, vm_, d_);
  return scale(a.mantissa / b.mantissa, a.exponent - b.exponent);
}

FieldElement ExactOrbit::iterate() const {
  return FieldElement(RingElement(d_, un_, um_), RingElement(d_, vn_, vm_));
}

RingElement ExactOrbit::q() const {
  if (!track_) fail(ErrorKind::precondition, "ExactOrbit: denominators are not tracked");
  return RingElement(d_, qn_, qm_);
}

RingElement ExactOrbit::q_prev() const {
  if (!track_) fail(ErrorKind::precondition, "ExactOrbit: denominators are not tracked");
  return RingElement(d_, qpn_, qpm_);
}

double ExactOrbit::log_abs_q() const {
  if (!track_) fail(ErrorKind::precondition, "ExactOrbit: denominators are not tracked");
  const ScaledComplex s = scaled_pair(qn_, qm_, d_);
  return std::log(std::abs(s.mantissa)) + static_cast<double>(s.exponent) * std::log(2.0);
}

double ExactOrbit::log_abs_q_prev() const {
  if (!track_) fail(ErrorKind::precondition, "ExactOrbit: denominators are not tracked");
  if (sgn(qpn_) == 0 && sgn(qpm_) == 0) return -HUGE_VAL;
  const ScaledComplex s = scaled_pair(qpn_, qpm_, d_);
  return std::log(std::abs(s.mantissa)) + static_cast<double>(s.exponent) * std::log(2.0);
}

std::complex<double> ExactOrbit::q_ratio() const {
  if (!track_) fail(ErrorKind::precondition, "ExactOrbit: denominators are not tracked");
  const ScaledComplex a = scaled_pair(qn_, qm_, d_);
  const ScaledComplex b = scaled_pair(qpn_, qpm_, d_);
  return scale(a.mantissa / b.mantissa, a.exponent - b.exponent);
}

bool ExactOrbit::choose_small_digit(long& n_out, long& m_out) {
  // 1 / G^n = v / u
  const ScaledComplex a = scaled_pair(vn_, vm_, d_);
  const ScaledComplex b = scaled_pair(un_, um_, d_);
  const long e = a.exponent - b.exponent;
  if (e < 48) {
    const std::complex<double> z = scale(a.mantissa / b.mantissa, e);
    const double mag = std::abs(z);
    if (mag < 0x1p40) {
      const bool hex = d_.three_mod_four();
      const double im = d_.omega_im();
      const double t = z.imag() / im;
      const double s = hex ? z.real() + t / 2 : z.real();
      const long s0 = static_cast<long>(std::floor(s + 0.5));
      const long t0 = static_cast<long>(std::floor(t + 0.5));

      struct Candidate {
        double dist;
        long n, m;
      };
      std::array<Candidate, 9> cand{};
      std::size_t k = 0;
      for (long dn = -1; dn <= 1; ++dn) {
        for (long dm = -1; dm <= 1; ++dm) {
          const long n = s0 + dn;
          const long m = t0 + dm;
          const double ex = z.real() - (hex ? static_cast<double>(n) - 0.5 * static_cast<double>(m) : static_cast<double>(n));
          const double ey = z.imag() - static_cast<double>(m) * im;
          cand[k++] = {ex * ex + ey * ey, n, m};
        }
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < cand.size(); ++i) {
        if (cand[i].dist < cand[best].dist) best = i;
      }
      // Error in z is a few ulp of |z|; distances are O(1).
      const double margin = 1e-10 * (1.0 + mag);
      bool contested = false;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (i != best && cand[i].dist - cand[best].dist <= margin) contested = true;
      }
      if (!contested) {
        n_out = cand[best].n;
        m_out = cand[best].m;
        return true;
      }
      // Exact comparison of N(v - a u) among the contested candidates.
      ++exact_decisions_;
      const RingElement u(d_, un_, um_);
      const RingElement v(d_, vn_, vm_);
      bool have = false;
      mpz_class best_dist;
      std::tuple<long long, long, long> best_key{};
      for (const Candidate& c : cand) {
        if (c.dist - cand[best].dist > margin) continue;
        const RingElement ac(d_, c.n, c.m);
        const mpz_class dist = (v - ac * u).norm();
        const auto key = std::make_tuple(detail::small_norm(c.n, c.m, d_), c.n, c.m);
        const int cmpd = have ? cmp(dist, best_dist) : -1;
        if (cmpd < 0 || (cmpd == 0 && key < best_key)) {
          have = true;
          best_dist = dist;
          best_key = key;
        }
      }
      n_out = std::get<1>(best_key);
      m_out = std::get<2>(best_key);
      return true;
    }
  }
  // Huge partial quotient: exact search.
  ++exact_decisions_;
  digit_ = nearest_lattice_point(RingElement(d_, vn_, vm_), RingElement(d_, un_, um_));
  if (abs(digit_.n()) < kSmallDigit && abs(digit_.m()) < kSmallDigit) {
    n_out = digit_.n().get_si();
    m_out = digit_.m().get_si();
    return true;
  }
  return false;
}

bool ExactOrbit::advance() {
  if (finished()) return false;
  long an = 0;
  long am = 0;
  if (choose_small_digit(an, am)) {
    // v <- v - a u, then swap so that (u, v) <- (v - a u, u).
    add_digit_times(vn_, vm_, -an, -am, un_, um_, d_);
    if (track_) add_digit_times(qpn_, qpm_, an, am, qn_, qm_, d_);
    digit_ = RingElement(d_, an, am);
    digit_abs_ = std::sqrt(static_cast<double>(detail::small_norm(an, am, d_)));
  } else {
    const RingElement u(d_, un_, um_);
    const RingElement nv = RingElement(d_, vn_, vm_) - digit_ * u;
    vn_ = nv.n();
    vm_ = nv.m();
    if (track_) {
      const RingElement nq = RingElement(d_, qpn_, qpm_) + digit_ * RingElement(d_, qn_, qm_);
      qpn_ = nq.n();
      qpm_ = nq.m();
    }
    digit_abs_ = std::sqrt(digit_.norm().get_d());
  }
  swap(un_, vn_);
  swap(um_, vm_);
  if (track_) {
    swap(qn_, qpn_);
    swap(qm_, qpm_);
  }
  ++n_;
  return true;
}

}  // namespace bianchi
