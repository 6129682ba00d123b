#include "bianchi/hyperbolic.hpp"

#include <cmath>

namespace bianchi {

MobiusMap::MobiusMap(RingElement a, RingElement b, RingElement c, RingElement d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  if (!(a_.disc() == b_.disc() && a_.disc() == c_.disc() && a_.disc() == d_.disc())) {
    fail(ErrorKind::invalid_argument, "MobiusMap: entries from different rings");
  }
  if (!det().is_unit()) fail(ErrorKind::invalid_argument, "MobiusMap: determinant is not a unit");
}

MobiusMap MobiusMap::identity(Discriminant d) {
  return {RingElement(d, 1, 0), RingElement(d, 0, 0), RingElement(d, 0, 0), RingElement(d, 1, 0)};
}

MobiusMap MobiusMap::S(Discriminant d) {
  return {RingElement(d, 0, 0), RingElement(d, 1, 0), RingElement(d, -1, 0), RingElement(d, 0, 0)};
}

MobiusMap MobiusMap::T(const RingElement& q) {
  const Discriminant d = q.disc();
  return {RingElement(d, 1, 0), q, RingElement(d, 0, 0), RingElement(d, 1, 0)};
}

MobiusMap MobiusMap::rotation(Discriminant d) {
  if (d.value() != 1 && d.value() != 3) fail(ErrorKind::invalid_argument, "rotation generator exists only for d = 1, 3");
  const RingElement w(d, 0, 1);
  return {w, RingElement(d, 0, 0), RingElement(d, 0, 0), w.conj()};
}

RingElement MobiusMap::det() const { return a_ * d_ - b_ * c_; }

MobiusMap MobiusMap::inverse() const {
  // adj / det, and 1/det = conj(det) for a unit.
  const RingElement u = det().conj();
  return {d_ * u, -(b_ * u), -(c_ * u), a_ * u};
}

MobiusMap MobiusMap::operator*(const MobiusMap& o) const {
  return {a_ * o.a_ + b_ * o.c_, a_ * o.b_ + b_ * o.d_, c_ * o.a_ + d_ * o.c_, c_ * o.b_ + d_ * o.d_};
}

bool MobiusMap::same_matrix(const MobiusMap& o) const {
  return a_ == o.a_ && b_ == o.b_ && c_ == o.c_ && d_ == o.d_;
}

bool MobiusMap::operator==(const MobiusMap& o) const {
  if (same_matrix(o)) return true;
  return a_ == -o.a_ && b_ == -o.b_ && c_ == -o.c_ && d_ == -o.d_;
}

const FieldElement& BoundaryPoint::value() const {
  if (infinite_) fail(ErrorKind::precondition, "boundary point is infinity");
  return z_;
}

bool BoundaryPoint::operator==(const BoundaryPoint& o) const {
  if (infinite_ || o.infinite_) return infinite_ == o.infinite_;
  return z_ == o.z_;
}

BoundaryPoint act(const MobiusMap& g, const BoundaryPoint& z) {
  const Discriminant d = g.disc();
  if (z.is_infinity()) {
    if (g.c().is_zero()) return BoundaryPoint::infinity(d);
    return FieldElement(g.a(), g.c());
  }
  const FieldElement& w = z.value();
  const FieldElement den = FieldElement(g.c()) * w + FieldElement(g.d());
  if (den.is_zero()) return BoundaryPoint::infinity(d);
  return (FieldElement(g.a()) * w + FieldElement(g.b())) / den;
}

H3Point hemisphere_intersection(const GeodesicLift& lift) {
  if (!lift.attracting) fail(ErrorKind::precondition, "hemisphere_intersection: attracting endpoint at infinity");
  const std::complex<double> beta = *lift.attracting;
  const double nb = std::norm(beta);
  if (!(nb < 1.0)) fail(ErrorKind::precondition, "hemisphere_intersection: |beta| must be < 1");
  if (!lift.repelling) return {beta.real(), beta.imag(), std::sqrt(1.0 - nb)};
  const std::complex<double> alpha = *lift.repelling;
  const double na = std::norm(alpha);
  if (!(na > 1.0)) fail(ErrorKind::precondition, "hemisphere_intersection: |alpha| must be > 1");
  const double span = na - nb;
  const double c = (1.0 - nb) / span;
  const std::complex<double> z = beta + c * (alpha - beta);
  const double r = std::sqrt((1.0 - nb) * (na - 1.0)) * std::abs(alpha - beta) / span;
  return {z.real(), z.imag(), r};
}

H3Point geodesic_position(const GeodesicLift& lift, const H3Point& p, double t) {
  if (!(p.r > 0)) fail(ErrorKind::precondition, "geodesic_position: basepoint must lie in H^3");
  constexpr double tol = 1e-9;
  if (!lift.attracting && !lift.repelling) fail(ErrorKind::invalid_argument, "geodesic_position: both endpoints infinite");
  if (!lift.repelling || !lift.attracting) {
    // Vertical line over the finite endpoint; height e^{-t} r toward it.
    const std::complex<double> foot = lift.attracting ? *lift.attracting : *lift.repelling;
    if (std::abs(horizontal(p) - foot) > tol * (1.0 + std::abs(foot))) {
      fail(ErrorKind::precondition, "geodesic_position: basepoint is off the geodesic");
    }
    const double sign = lift.attracting ? -1.0 : 1.0;
    return {foot.real(), foot.imag(), p.r * std::exp(sign * t)};
  }
  const std::complex<double> A = *lift.attracting;
  const std::complex<double> R = *lift.repelling;
  if (A == R) fail(ErrorKind::invalid_argument, "geodesic_position: coincident endpoints");
  // Semicircle over [R, A] with centre m and radius rho. With
  // z = m + rho cos(theta) u and r = rho sin(theta), arclength is
  // d theta / sin(theta); substituting cos(theta) = tanh(s),
  // sin(theta) = sech(s) makes s the unit-speed parameter.
  const std::complex<double> m = (A + R) / 2.0;
  const double rho = std::abs(A - R) / 2.0;
  const std::complex<double> u = (A - R) / (2.0 * rho);
  const std::complex<double> off = horizontal(p) - m;
  const double along = (off * std::conj(u)).real();
  const double across = (off * std::conj(u)).imag();
  const double sphere = std::abs(along * along + p.r * p.r - rho * rho);
  if (std::abs(across) > tol * (1.0 + rho) || sphere > tol * (1.0 + rho * rho)) {
    fail(ErrorKind::precondition, "geodesic_position: basepoint is off the geodesic");
  }
  const double s0 = std::atanh(std::clamp(along / rho, -1.0, 1.0));
  const double s = s0 + t;
  const std::complex<double> z = m + rho * std::tanh(s) * u;
  return {z.real(), z.imag(), rho / std::cosh(s)};
}

MobiusMap word_to_map(const std::vector<WordToken>& word, Discriminant d) {
  MobiusMap m = MobiusMap::identity(d);
  for (const WordToken& tok : word) {
    switch (tok.kind) {
      case Generator::translate:
        m = MobiusMap::T(tok.shift) * m;
        break;
      case Generator::invert:
        m = MobiusMap::S(d) * m;
        break;
      case Generator::rotate:
        m = MobiusMap::rotation(d) * m;
        break;
    }
  }
  return m;
}

bool in_domain_cell(std::complex<double> z, Discriminant d, double tol) {
  if (!in_cell_closure(z, d, tol)) return false;
  if (d.value() == 1) return z.real() >= -tol;
  if (d.value() == 3) {
    if (std::abs(z) <= tol) return true;
    // arg z in [pi/6, 5pi/6]: both boundary rays, as half-plane tests.
    const double s = 0.5;
    const double c = std::sqrt(3.0) / 2.0;
    return z.imag() * c - z.real() * s >= -tol && z.imag() * c + z.real() * s >= -tol;
  }
  return true;
}

bool in_fundamental_domain(const H3Point& p, Discriminant d, double tol) {
  const std::complex<double> z = horizontal(p);
  return p.r > 0 && in_domain_cell(z, d, tol) && std::norm(z) + p.r * p.r >= 1.0 - tol;
}

MobiusMap generator_product(const Expansion& e, std::size_t n) {
  const Discriminant d = e.disc();
  if (n > e.size()) fail(ErrorKind::precondition, "generator_product: not enough digits");
  MobiusMap m = MobiusMap::identity(d);
  const RingElement one(d, 1, 0);
  const RingElement zero(d, 0, 0);
  for (std::size_t k = 1; k <= n; ++k) {
    // T^x S = [[-x, 1], [-1, 0]] with x = (-1)^{k-1} a_k
    const RingElement x = k % 2 == 1 ? e.digit(k) : -e.digit(k);
    m = MobiusMap(-x, one, -one, zero) * m;
  }
  return m;
}

MobiusMap p_matrix_unchecked(const Expansion& e, std::size_t n) {
  if (n < 1 || n > e.size()) fail(ErrorKind::precondition, "p_matrix: needs 1 <= n <= digits");
  const long k = static_cast<long>(n);
  const bool odd = n % 2 == 1;
  return {e.q(k), -e.p(k), odd ? e.q(k - 1) : -e.q(k - 1), odd ? -e.p(k - 1) : e.p(k - 1)};
}

MobiusMap p_matrix(const Expansion& e, std::size_t n) {
  MobiusMap m = p_matrix_unchecked(e, n);
  if (!(m == generator_product(e, n))) fail(ErrorKind::numeric, "p_matrix: generator product mismatch");
  return m;
}

}  // namespace bianchi
