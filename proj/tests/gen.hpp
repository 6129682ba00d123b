#pragma once

// Seeded generators for property tests.

#include <complex>
#include <cstdint>
#include <random>

#include <gmpxx.h>

#include "bianchi/ring.hpp"

namespace testgen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(eng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }

  mpz_class big(unsigned bits) {
    mpz_class r = 0;
    for (unsigned done = 0; done < bits; done += 32) {
      r <<= 32;
      r += static_cast<unsigned long>(eng_() & 0xffffffffu);
    }
    r >>= (bits + 31) / 32 * 32 - bits;
    return integer(0, 1) ? r : mpz_class(-r);
  }

  bianchi::RingElement ring(bianchi::Discriminant d, unsigned bits) { return {d, big(bits), big(bits)}; }
  bianchi::RingElement small_ring(bianchi::Discriminant d, long range) {
    return {d, integer(-range, range), integer(-range, range)};
  }

  std::complex<double> complex_box(double half) { return {real(-half, half), real(-half, half)}; }

  // Uniform exact point of the cell with `bits`-bit coordinates (rejection).
  bianchi::FieldElement cell_point(bianchi::Discriminant d, unsigned bits);

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace testgen

#include "bianchi/cfrac.hpp"

inline bianchi::FieldElement testgen::Gen::cell_point(bianchi::Discriminant d, unsigned bits) {
  const mpz_class scale = mpz_class(1) << bits;
  for (;;) {
    // s, t in [-1, 1) cover the cell in the {1, w} coordinates.
    const mpq_class s(big(bits), scale);
    const mpq_class t(big(bits), scale);
    auto z = bianchi::FieldElement::from_coordinates(d, s, t);
    if (bianchi::in_cell(z)) return z;
  }
}
