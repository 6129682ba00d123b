#include <cmath>
#include <complex>
#include <limits>

#include "doctest.h"
#include "gen.hpp"

#include "bianchi/error.hpp"
#include "bianchi/ring.hpp"

using namespace bianchi;

namespace {

const int kDs[] = {1, 2, 3, 7, 11};

// Circumradius of the lattice triangle 0, 1, 1 + w (abc / 4A).
double covering_radius_oracle(int d) {
  const std::complex<double> v = 1.0 + Discriminant(d).omega();
  const double a = 1.0;
  const double b = std::abs(v);
  const double c = std::abs(v - 1.0);
  const double area = v.imag() / 2;
  return a * b * c / (4 * area);
}

}  // namespace

TEST_CASE("discriminant accepts only the Euclidean values") {
  for (int d : kDs) CHECK_NOTHROW(Discriminant{d});
  for (int d : {-1, 0, 4, 5, 6, 15, 19, 43}) {
    try {
      Discriminant bad(d);
      FAIL("constructed d=" << d);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_argument);
    }
  }
}

TEST_CASE("embed") {
  const auto e1 = embed(RingElement(Discriminant(1), 2, 3));
  CHECK(e1 == std::complex<double>(2.0, 3.0));
  const auto e3 = embed(RingElement(Discriminant(3), 1, 1));
  CHECK(e3.real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e3.imag() == doctest::Approx(0.8660254037844386).epsilon(1e-15));
  for (int d : kDs) CHECK(embed(RingElement(Discriminant(d), 0, 0)) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("norm values") {
  CHECK(norm(RingElement(Discriminant(1), 2, 3)) == 13);
  CHECK(norm(RingElement(Discriminant(3), 1, 1)) == 1);
  CHECK(norm(RingElement(Discriminant(11), 0, 1)) == 3);
  CHECK(std::norm(embed(RingElement(Discriminant(3), 1, 1))) == doctest::Approx(1.0));
}

TEST_CASE("norm agrees with the embedding") {
  testgen::Gen g(11);
  for (int d : kDs) {
    for (int i = 0; i < 200; ++i) {
      const RingElement x = g.small_ring(Discriminant(d), 1000);
      CHECK(x.norm().get_d() == doctest::Approx(std::norm(embed(x))).epsilon(1e-12));
    }
  }
}

TEST_CASE("norm is multiplicative") {
  testgen::Gen g(12);
  for (int d : kDs) {
    for (int i = 0; i < 2000; ++i) {
      const RingElement x = g.ring(Discriminant(d), 80);
      const RingElement y = g.ring(Discriminant(d), 80);
      REQUIRE(norm(x * y) == norm(x) * norm(y));
    }
  }
}

TEST_CASE("nearest lattice point examples") {
  CHECK(nearest_lattice_point({0.7, 0.6}, Discriminant(1)) == RingElement(Discriminant(1), 1, 1));
  CHECK(nearest_lattice_point({0.5, 0.5}, Discriminant(3)) == RingElement(Discriminant(3), 1, 1));
  // Tie between 1 - i and 1 - 2i.
  CHECK(nearest_lattice_point({1.0, -1.5}, Discriminant(1)) == RingElement(Discriminant(1), 1, -1));
}

TEST_CASE("nearest lattice point d=3 by exhaustive search") {
  const Discriminant d(3);
  const std::complex<double> z(0.5, 0.5);
  double best = std::numeric_limits<double>::infinity();
  long bn = 0;
  long bm = 0;
  for (long n = -4; n <= 4; ++n) {
    for (long m = -4; m <= 4; ++m) {
      const double dist = std::abs(z - embed(RingElement(d, n, m)));
      if (dist <= 2 && dist < best) {
        best = dist;
        bn = n;
        bm = m;
      }
    }
  }
  CHECK(nearest_lattice_point(z, d) == RingElement(d, bn, bm));
}

TEST_CASE("nearest lattice point beats its 5x5 neighborhood") {
  testgen::Gen g(13);
  for (int d : kDs) {
    const Discriminant D(d);
    const double radius = covering_radius_oracle(d);
    CHECK(D.cell_radius() == doctest::Approx(radius).epsilon(1e-12));
    for (int i = 0; i < 10000; ++i) {
      const std::complex<double> z = g.complex_box(50.0);
      const RingElement a = nearest_lattice_point(z, D);
      const double best = std::abs(z - embed(a));
      REQUIRE(best <= radius + 1e-12);
      for (long dn = -2; dn <= 2; ++dn) {
        for (long dm = -2; dm <= 2; ++dm) {
          const RingElement b = a + RingElement(D, dn, dm);
          REQUIRE(best <= std::abs(z - embed(b)) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("nearest lattice point rejects non-finite input") {
  CHECK_THROWS_AS(nearest_lattice_point({std::nan(""), 0.0}, Discriminant(1)), Error);
  CHECK_THROWS_AS(nearest_lattice_point({HUGE_VAL, 0.0}, Discriminant(2)), Error);
}

TEST_CASE("exact nearest point matches the floating search") {
  testgen::Gen g(14);
  for (int d : kDs) {
    const Discriminant D(d);
    for (int i = 0; i < 2000; ++i) {
      const RingElement num = g.small_ring(D, 1000);
      RingElement den = g.small_ring(D, 30);
      if (den.is_zero()) continue;
      const FieldElement z(num, den);
      const RingElement exact = nearest_lattice_point(z);
      const RingElement approx = nearest_lattice_point(embed(z), D);
      // Only exact ties may differ, and then the distances agree.
      if (!(exact == approx)) {
        CHECK(std::abs(embed(z) - embed(exact)) == doctest::Approx(std::abs(embed(z) - embed(approx))));
      }
      CHECK(nearest_lattice_point(num, den) == exact);
    }
  }
}

TEST_CASE("field operations") {
  const Discriminant d1(1);
  const auto beta = FieldElement::from_coordinates(d1, mpq_class(3, 10), mpq_class(1, 5));
  const FieldElement expected(RingElement(d1, 30, -20), RingElement(d1, 13, 0));
  CHECK(beta.inverse() == expected);
  CHECK(beta * beta.inverse() == FieldElement(RingElement(d1, 1, 0)));
  CHECK(beta.conj().conj() == beta);
  CHECK_THROWS_AS(FieldElement(d1).inverse(), Error);
  try {
    FieldElement(RingElement(d1, 1, 0), RingElement(d1, 0, 0));
    FAIL("zero denominator accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::division_by_zero);
  }
}

TEST_CASE("field axioms on random elements") {
  testgen::Gen g(15);
  for (int d : kDs) {
    const Discriminant D(d);
    for (int i = 0; i < 500; ++i) {
      RingElement a = g.ring(D, 40);
      RingElement b = g.ring(D, 40);
      RingElement c = g.ring(D, 40);
      if (b.is_zero() || c.is_zero()) continue;
      const FieldElement x(a, b);
      const FieldElement y(c, b + c);
      if (x.is_zero()) continue;
      CHECK(x * x.inverse() == FieldElement(RingElement(D, 1, 0)));
      CHECK(x.conj().conj() == x);
      CHECK((x + y) - y == x);
      CHECK((x * y) / y == x);
      CHECK(-(-x) == x);
      CHECK((x * x.conj()).norm() == x.norm() * x.norm());
      CHECK(std::abs(embed(x) - embed(a) / embed(b)) <= 1e-9 * std::abs(embed(x)));
      // Canonical form is idempotent.
      FieldElement again = x;
      again.canonicalize();
      CHECK(again.numerator() == x.numerator());
      CHECK(again.denominator_integer() == x.denominator_integer());
    }
  }
}

TEST_CASE("canonical form has coprime integer data") {
  const Discriminant d(7);
  const FieldElement x(RingElement(d, 6, 4), RingElement(d, 2, 0));
  CHECK(x.numerator() == RingElement(d, 3, 2));
  CHECK(x.denominator_integer() == 1);
  const FieldElement y(RingElement(d, 3, 2), RingElement(d, -6, 0));
  CHECK(y.denominator_integer() == 6);
  CHECK(y.numerator() == RingElement(d, -3, -2));
}

TEST_CASE("parse points") {
  const Discriminant d1(1);
  const auto p = parse_point("3/10+1/5i", d1);
  REQUIRE(std::holds_alternative<FieldElement>(p));
  CHECK(std::get<FieldElement>(p) == FieldElement::from_coordinates(d1, mpq_class(3, 10), mpq_class(1, 5)));
  const auto q = parse_point("0.25-0.5*w", Discriminant(3));
  REQUIRE(std::holds_alternative<FieldElement>(q));
  CHECK(std::get<FieldElement>(q) == FieldElement::from_coordinates(Discriminant(3), mpq_class(1, 4), mpq_class(-1, 2)));
  const auto r = parse_point("0.1+0.2i", Discriminant(2));
  CHECK(std::holds_alternative<std::complex<double>>(r));
  CHECK(std::holds_alternative<FieldElement>(parse_point("-i", d1)));
  CHECK_THROWS_AS(parse_point("1+", d1), Error);
  CHECK_THROWS_AS(parse_point("abc", d1), Error);
  CHECK_THROWS_AS(parse_point("1/0", d1), Error);
}

TEST_CASE("string forms") {
  CHECK(RingElement(Discriminant(1), 2, -2).to_string() == "2-2i");
  CHECK(RingElement(Discriminant(3), 0, 1).to_string() == "w");
  CHECK(RingElement(Discriminant(1), 0, 0).to_string() == "0");
}
