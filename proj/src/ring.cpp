#include "bianchi/ring.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "bianchi/error.hpp"

namespace bianchi {

Discriminant::Discriminant(int d) : d_(d) {
  for (int s : supported) {
    if (s == d) return;
  }
  fail(ErrorKind::invalid_argument,
       "unsupported discriminant d=" + std::to_string(d) + " (expected 1, 2, 3, 7 or 11)");
}

double Discriminant::omega_im() const noexcept {
  const double root = std::sqrt(static_cast<double>(d_));
  return three_mod_four() ? root / 2 : root;
}

double Discriminant::cell_area() const noexcept { return omega_im(); }

double Discriminant::cell_radius() const noexcept {
  const double d = d_;
  if (three_mod_four()) return std::sqrt(0.25 + (d - 1) * (d - 1) / (16 * d));
  return std::sqrt(0.25 + d / 4);
}

// ---------------------------------------------------------------------------
// RingElement

mpz_class RingElement::norm() const {
  mpz_class r = n_ * n_ + d_.omega_norm() * (m_ * m_);
  if (d_.omega_trace() != 0) r += d_.omega_trace() * (n_ * m_);
  return r;
}

RingElement RingElement::conj() const {
  return RingElement(d_, n_ + d_.omega_trace() * m_, -m_);
}

RingElement& RingElement::operator+=(const RingElement& o) {
  n_ += o.n_;
  m_ += o.m_;
  return *this;
}

RingElement& RingElement::operator-=(const RingElement& o) {
  n_ -= o.n_;
  m_ -= o.m_;
  return *this;
}

RingElement& RingElement::operator*=(const RingElement& o) {
  // (a + bw)(c + ew) = ac - be*nm + (ae + bc + be*tr) w
  const mpz_class be = m_ * o.m_;
  mpz_class n = n_ * o.n_ - d_.omega_norm() * be;
  mpz_class m = n_ * o.m_ + m_ * o.n_;
  if (d_.omega_trace() != 0) m += d_.omega_trace() * be;
  n_ = std::move(n);
  m_ = std::move(m);
  return *this;
}

std::complex<double> RingElement::to_complex() const {
  if (d_.three_mod_four()) {
    const mpz_class twice_x = 2 * n_ - m_;
    return {twice_x.get_d() / 2, m_.get_d() * d_.omega_im()};
  }
  return {n_.get_d(), m_.get_d() * d_.omega_im()};
}

namespace {

std::string format_pair(const mpz_class& n, const mpz_class& m, char unit) {
  std::ostringstream os;
  if (sgn(m) == 0) {
    os << n;
    return os.str();
  }
  if (sgn(n) != 0) {
    os << n << (sgn(m) < 0 ? "-" : "+");
  } else if (sgn(m) < 0) {
    os << '-';
  }
  const mpz_class am = abs(m);
  if (am != 1) os << am;
  os << unit;
  return os.str();
}

}  // namespace

std::string RingElement::to_string() const {
  return format_pair(n_, m_, d_.value() == 1 ? 'i' : 'w');
}

// ---------------------------------------------------------------------------
// FieldElement

FieldElement::FieldElement(RingElement num, mpz_class den, int) : num_(std::move(num)), den_(std::move(den)) {
  canonicalize();
}

FieldElement::FieldElement(const RingElement& num, const RingElement& den) : num_(num.disc()) {
  if (den.is_zero()) fail(ErrorKind::division_by_zero, "field element with zero denominator");
  num_ = num * den.conj();
  den_ = den.norm();
  canonicalize();
}

void FieldElement::canonicalize() {
  if (sgn(den_) == 0) fail(ErrorKind::division_by_zero, "field element with zero denominator");
  if (num_.is_zero()) {
    den_ = 1;
    return;
  }
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), num_.n().get_mpz_t(), num_.m().get_mpz_t());
  mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), den_.get_mpz_t());
  if (sgn(den_) < 0) g = -g;
  if (g != 1) {
    mpz_class n, m;
    mpz_divexact(n.get_mpz_t(), num_.n().get_mpz_t(), g.get_mpz_t());
    mpz_divexact(m.get_mpz_t(), num_.m().get_mpz_t(), g.get_mpz_t());
    mpz_divexact(den_.get_mpz_t(), den_.get_mpz_t(), g.get_mpz_t());
    num_ = RingElement(num_.disc(), std::move(n), std::move(m));
  }
}

FieldElement FieldElement::from_coordinates(Discriminant d, const mpq_class& s, const mpq_class& t) {
  mpz_class den;
  mpz_lcm(den.get_mpz_t(), s.get_den_mpz_t(), t.get_den_mpz_t());
  const mpz_class a = s.get_num() * (den / s.get_den());
  const mpz_class b = t.get_num() * (den / t.get_den());
  return FieldElement(RingElement(d, a, b), den, 0);
}

mpq_class FieldElement::s() const {
  mpq_class r(num_.n(), den_);
  r.canonicalize();
  return r;
}

mpq_class FieldElement::t() const {
  mpq_class r(num_.m(), den_);
  r.canonicalize();
  return r;
}

mpq_class FieldElement::real_part() const {
  if (disc().three_mod_four()) {
    mpq_class r(2 * num_.n() - num_.m(), 2 * den_);
    r.canonicalize();
    return r;
  }
  return s();
}

mpq_class FieldElement::imag_over_sqrt_d() const {
  if (disc().three_mod_four()) {
    mpq_class r(num_.m(), 2 * den_);
    r.canonicalize();
    return r;
  }
  return t();
}

mpq_class FieldElement::norm() const {
  mpq_class r(num_.norm(), den_ * den_);
  r.canonicalize();
  return r;
}

FieldElement FieldElement::conj() const { return FieldElement(num_.conj(), den_, 0); }

FieldElement FieldElement::inverse() const {
  if (is_zero()) fail(ErrorKind::division_by_zero, "inverse of zero");
  // (A + Bw)/D  ->  D * conj(A + Bw) / N(A + Bw)
  RingElement n = num_.conj();
  n *= RingElement(disc(), den_, mpz_class(0));
  return FieldElement(std::move(n), num_.norm(), 0);
}

std::complex<double> FieldElement::to_complex() const {
  const double root = std::sqrt(static_cast<double>(disc().value()));
  return {real_part().get_d(), imag_over_sqrt_d().get_d() * root};
}

std::string FieldElement::to_string() const {
  if (den_ == 1) return num_.to_string();
  std::ostringstream os;
  if (sgn(num_.m()) == 0) {
    os << num_.n() << '/' << den_;
  } else {
    os << '(' << num_.to_string() << ")/" << den_;
  }
  return os.str();
}

FieldElement FieldElement::operator-() const { return FieldElement(-num_, den_, 0); }

FieldElement operator+(const FieldElement& a, const FieldElement& b) {
  const Discriminant d = a.disc();
  RingElement n(d, a.num_.n() * b.den_ + b.num_.n() * a.den_, a.num_.m() * b.den_ + b.num_.m() * a.den_);
  return FieldElement(std::move(n), a.den_ * b.den_, 0);
}

FieldElement operator-(const FieldElement& a, const FieldElement& b) { return a + (-b); }

FieldElement operator*(const FieldElement& a, const FieldElement& b) {
  return FieldElement(a.num_ * b.num_, a.den_ * b.den_, 0);
}

FieldElement operator/(const FieldElement& a, const FieldElement& b) { return a * b.inverse(); }

// ---------------------------------------------------------------------------
// Nearest lattice point

RingElement nearest_lattice_point(std::complex<double> z, Discriminant d) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    fail(ErrorKind::precondition, "nearest_lattice_point: non-finite input");
  }
  constexpr double limit = 0x1p52;
  if (std::abs(z.real()) > limit || std::abs(z.imag()) > limit) {
    fail(ErrorKind::precondition, "nearest_lattice_point: |z| exceeds the double integer range");
  }
  const auto [n, m] = nearest_coordinates(z.real(), z.imag(), d);
  return RingElement(d, n, m);
}

namespace {

// floor((2x + n) / (2n)) for n > 0: nearest integer to x / n.
mpz_class round_quotient(const mpz_class& x, const mpz_class& n) {
  mpz_class q;
  const mpz_class num = 2 * x + n;
  const mpz_class den = 2 * n;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

}  // namespace

RingElement nearest_lattice_point(const RingElement& num, const RingElement& den) {
  if (den.is_zero()) fail(ErrorKind::division_by_zero, "nearest_lattice_point: zero denominator");
  const Discriminant d = num.disc();
  const RingElement w = num * den.conj();
  const mpz_class n = den.norm();
  const mpz_class s0 = round_quotient(w.n(), n);
  const mpz_class t0 = round_quotient(w.m(), n);

  std::optional<RingElement> best;
  mpz_class best_dist, best_norm;
  for (long dn = -1; dn <= 1; ++dn) {
    for (long dm = -1; dm <= 1; ++dm) {
      RingElement a(d, s0 + dn, t0 + dm);
      const mpz_class dist = (num - a * den).norm();
      const mpz_class an = a.norm();
      bool better = !best;
      if (!better) {
        const int c = cmp(dist, best_dist);
        if (c < 0) {
          better = true;
        } else if (c == 0) {
          const int cn = cmp(an, best_norm);
          better = cn < 0 || (cn == 0 && (cmp(a.n(), best->n()) < 0 ||
                                          (a.n() == best->n() && cmp(a.m(), best->m()) < 0)));
        }
      }
      if (better) {
        best_dist = dist;
        best_norm = an;
        best = std::move(a);
      }
    }
  }
  return *best;
}

RingElement nearest_lattice_point(const FieldElement& z) {
  return nearest_lattice_point(z.numerator(), z.denominator());
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class PointParser {
 public:
  explicit PointParser(std::string_view text) : text_(text) {}

  // Returns coefficients on 1, i and w.
  std::array<mpq_class, 3> parse() {
    std::array<mpq_class, 3> acc{0, 0, 0};
    skip_space();
    if (done()) error("empty input");
    bool first = true;
    while (!done()) {
      int sign = 1;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1 : 1;
        ++pos_;
        skip_space();
      } else if (!first) {
        error("expected '+' or '-'");
      }
      first = false;
      mpq_class value(1);
      const bool has_number = !done() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.');
      if (has_number) value = number();
      skip_space();
      int slot = 0;
      if (!done() && peek() == '*') {
        ++pos_;
        skip_space();
        if (done() || (peek() != 'i' && peek() != 'w')) error("expected 'i' or 'w' after '*'");
      }
      if (!done() && (peek() == 'i' || peek() == 'w')) {
        slot = peek() == 'i' ? 1 : 2;
        ++pos_;
      } else if (!has_number) {
        error("expected a number");
      }
      acc[slot] += sign * value;
      skip_space();
    }
    return acc;
  }

 private:
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void skip_space() {
    while (!done() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::invalid_argument,
         "cannot parse point '" + std::string(text_) + "' at offset " + std::to_string(pos_) + ": " + what);
  }

  std::string digits() {
    std::string out;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) out += text_[pos_++];
    return out;
  }

  mpq_class number() {
    std::string whole = digits();
    std::string frac;
    if (!done() && peek() == '.') {
      ++pos_;
      frac = digits();
    }
    if (whole.empty() && frac.empty()) error("expected digits");
    mpz_class scale(1);
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    mpq_class value(mpz_class(whole.empty() ? "0" : whole) * scale + mpz_class(frac.empty() ? "0" : frac), scale);
    if (!done() && (peek() == 'e' || peek() == 'E')) {
      ++pos_;
      int esign = 1;
      if (!done() && (peek() == '+' || peek() == '-')) {
        esign = peek() == '-' ? -1 : 1;
        ++pos_;
      }
      const std::string e = digits();
      if (e.empty() || e.size() > 6) error("bad exponent");
      mpz_class p;
      mpz_ui_pow_ui(p.get_mpz_t(), 10, std::stoul(e));
      value = esign > 0 ? mpq_class(value * p) : mpq_class(value / p);
    }
    if (!done() && peek() == '/') {
      ++pos_;
      const std::string den = digits();
      if (den.empty()) error("expected denominator");
      mpz_class q(den);
      if (sgn(q) == 0) error("zero denominator");
      value /= q;
    }
    value.canonicalize();
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ParsedPoint parse_point(std::string_view text, Discriminant d) {
  const auto [re, im, w] = PointParser(text).parse();
  if (d.value() == 1) return FieldElement::from_coordinates(d, re, mpq_class(im + w));
  if (sgn(im) == 0) return FieldElement::from_coordinates(d, re, w);
  // x + iy with y rational and nonzero lies outside Q(sqrt(-d)) for d != 1.
  const std::complex<double> omega = d.omega();
  return std::complex<double>(re.get_d(), im.get_d()) + w.get_d() * omega;
}

}  // namespace bianchi
