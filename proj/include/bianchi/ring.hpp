#pragma once

// Exact arithmetic in the rings of integers Z[w] of the five imaginary
// quadratic fields Q(sqrt(-d)), d in {1, 2, 3, 7, 11}, that admit a
// Euclidean algorithm with respect to the norm.
//
//   w = (-1 + sqrt(-d)) / 2   if d = 3 mod 4
//   w = sqrt(-d)              otherwise
//
// Elements are n + m*w with arbitrary-precision integer coordinates. The
// minimal polynomial w^2 - tr*w + nm = 0 drives multiplication and the norm.

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <variant>

#include <gmpxx.h>

namespace bianchi {

class Discriminant {
 public:
  static constexpr std::array<int, 5> supported{1, 2, 3, 7, 11};

  // Throws Error(invalid_argument) for any d outside `supported`.
  explicit Discriminant(int d);

  int value() const noexcept { return d_; }
  bool three_mod_four() const noexcept { return d_ % 4 == 3; }

  // w + conj(w) and w * conj(w).
  long omega_trace() const noexcept { return three_mod_four() ? -1 : 0; }
  long omega_norm() const noexcept { return three_mod_four() ? (d_ + 1) / 4 : d_; }

  double omega_re() const noexcept { return three_mod_four() ? -0.5 : 0.0; }
  double omega_im() const noexcept;
  std::complex<double> omega() const noexcept { return {omega_re(), omega_im()}; }

  // Lebesgue area of the cell K_d (the lattice covolume).
  double cell_area() const noexcept;
  // A_d = sup |z| over K_d, attained at a vertex of the cell.
  double cell_radius() const noexcept;

  friend bool operator==(Discriminant a, Discriminant b) noexcept { return a.d_ == b.d_; }

 private:
  int d_;
};

class RingElement {
 public:
  explicit RingElement(Discriminant d) : d_(d) {}
  RingElement(Discriminant d, mpz_class n, mpz_class m)
      : d_(d), n_(std::move(n)), m_(std::move(m)) {}
  RingElement(Discriminant d, long n, long m) : d_(d), n_(n), m_(m) {}

  Discriminant disc() const noexcept { return d_; }
  const mpz_class& n() const noexcept { return n_; }
  const mpz_class& m() const noexcept { return m_; }

  bool is_zero() const { return sgn(n_) == 0 && sgn(m_) == 0; }
  mpz_class norm() const;
  bool is_unit() const { return norm() == 1; }
  RingElement conj() const;

  // n + m*w evaluated in double precision.
  std::complex<double> to_complex() const;

  // "3+2i" for d = 1, "3+2w" otherwise.
  std::string to_string() const;

  RingElement operator-() const { return RingElement(d_, -n_, -m_); }
  RingElement& operator+=(const RingElement& o);
  RingElement& operator-=(const RingElement& o);
  RingElement& operator*=(const RingElement& o);

  friend RingElement operator+(RingElement a, const RingElement& b) { return a += b; }
  friend RingElement operator-(RingElement a, const RingElement& b) { return a -= b; }
  friend RingElement operator*(RingElement a, const RingElement& b) { return a *= b; }
  friend bool operator==(const RingElement& a, const RingElement& b) {
    return a.d_ == b.d_ && a.n_ == b.n_ && a.m_ == b.m_;
  }

 private:
  Discriminant d_;
  mpz_class n_{0};
  mpz_class m_{0};
};

// Element of Q(sqrt(-d)) in the canonical form (A + B*w) / D with D > 0 and
// gcd(A, B, D) = 1. The representation is unique, so equality is structural.
class FieldElement {
 public:
  explicit FieldElement(Discriminant d) : num_(d) {}
  FieldElement(const RingElement& x) : num_(x) {}  // NOLINT: Z[w] embeds in the field
  // num / den; throws Error(division_by_zero) when den is zero.
  FieldElement(const RingElement& num, const RingElement& den);

  // s + t*w for rational coordinates.
  static FieldElement from_coordinates(Discriminant d, const mpq_class& s, const mpq_class& t);

  Discriminant disc() const noexcept { return num_.disc(); }
  const RingElement& numerator() const noexcept { return num_; }
  RingElement denominator() const { return RingElement(disc(), den_, mpz_class(0)); }
  const mpz_class& denominator_integer() const noexcept { return den_; }

  // Coordinates in the basis {1, w}.
  mpq_class s() const;
  mpq_class t() const;
  // Real part x, and y / sqrt(d) for the imaginary part y (both rational).
  mpq_class real_part() const;
  mpq_class imag_over_sqrt_d() const;

  bool is_zero() const { return num_.is_zero(); }
  mpq_class norm() const;
  FieldElement conj() const;
  // Throws Error(division_by_zero) on zero.
  FieldElement inverse() const;

  // Accurate to a few ulp regardless of coordinate size.
  std::complex<double> to_complex() const;
  std::string to_string() const;

  FieldElement operator-() const;
  friend FieldElement operator+(const FieldElement& a, const FieldElement& b);
  friend FieldElement operator-(const FieldElement& a, const FieldElement& b);
  friend FieldElement operator*(const FieldElement& a, const FieldElement& b);
  friend FieldElement operator/(const FieldElement& a, const FieldElement& b);
  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.den_ == b.den_ && a.num_ == b.num_;
  }

  // Re-applies the reduction; a no-op on any constructed value.
  void canonicalize();

 private:
  FieldElement(RingElement num, mpz_class den, int);

  RingElement num_;
  mpz_class den_{1};
};

inline std::complex<double> embed(const RingElement& x) { return x.to_complex(); }
inline std::complex<double> embed(const FieldElement& x) { return x.to_complex(); }
inline mpz_class norm(const RingElement& x) { return x.norm(); }

// Nearest element of Z[w] to z. Ties on the cell boundary go to the candidate
// with lexicographically smallest (norm, n, m). Throws Error(precondition)
// for non-finite z or |z| beyond the exactly-representable integer range.
RingElement nearest_lattice_point(std::complex<double> z, Discriminant d);

// Exact nearest element to num / den (den nonzero), same tie rule.
RingElement nearest_lattice_point(const RingElement& num, const RingElement& den);
RingElement nearest_lattice_point(const FieldElement& z);

// Integer coordinates (n, m) of the nearest lattice point to x + iy, for any
// real type with floor/sqrt. Used by the floating and extended-precision paths.
template <typename Real>
std::pair<long, long> nearest_coordinates(const Real& x, const Real& y, Discriminant d);

// Result of parsing a point: exact when it lies in Q(sqrt(-d)), otherwise the
// double-precision value.
using ParsedPoint = std::variant<FieldElement, std::complex<double>>;

// Accepts sums of rational terms "p/q", integers or decimals, each optionally
// suffixed by "i" (imaginary unit) or "w" (the generator w), e.g.
// "3/10+1/5i", "0.25-0.1w". Throws Error(invalid_argument) on malformed text.
ParsedPoint parse_point(std::string_view text, Discriminant d);

}  // namespace bianchi

#include "bianchi/ring_inl.hpp"
