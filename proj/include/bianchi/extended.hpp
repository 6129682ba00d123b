#pragma once

// Extended-precision reals for validation runs. Geometry templates in
// hyperbolic.hpp accept ExtReal in place of double.

#include <complex>

#include <boost/multiprecision/mpfr.hpp>
#include <gmpxx.h>

#include "bianchi/ring.hpp"

namespace bianchi {

using ExtReal = boost::multiprecision::mpfr_float;

// Sets the working precision of newly created ExtReal values on this thread
// for the lifetime of the scope.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned mantissa_bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_digits10_;
};

template <typename Real>
struct RealTraits;

template <>
struct RealTraits<double> {
  static double from_mpz(const mpz_class& x) { return x.get_d(); }
  static double from_mpq(const mpq_class& x) { return x.get_d(); }
  static double to_double(double x) { return x; }
};

template <>
struct RealTraits<ExtReal> {
  static ExtReal from_mpz(const mpz_class& x) {
    ExtReal r;
    mpfr_set_z(r.backend().data(), x.get_mpz_t(), MPFR_RNDN);
    return r;
  }
  static ExtReal from_mpq(const mpq_class& x) {
    ExtReal r;
    mpfr_set_q(r.backend().data(), x.get_mpq_t(), MPFR_RNDN);
    return r;
  }
  static double to_double(const ExtReal& x) { return x.convert_to<double>(); }
};

// Real and imaginary parts of x in the requested precision.
template <typename Real>
std::pair<Real, Real> embed_as(const RingElement& x) {
  using std::sqrt;
  using T = RealTraits<Real>;
  const Discriminant d = x.disc();
  const Real root = sqrt(Real(d.value()));
  if (d.three_mod_four()) {
    return {Real(T::from_mpz(x.n()) - T::from_mpz(x.m()) / 2), Real(T::from_mpz(x.m()) * root / 2)};
  }
  return {T::from_mpz(x.n()), Real(T::from_mpz(x.m()) * root)};
}

template <typename Real>
std::pair<Real, Real> embed_as(const FieldElement& x) {
  using std::sqrt;
  using T = RealTraits<Real>;
  const Real root = sqrt(Real(x.disc().value()));
  return {T::from_mpq(x.real_part()), Real(T::from_mpq(x.imag_over_sqrt_d()) * root)};
}

}  // namespace bianchi
