#pragma once

// Upper half-space model H^3 = {z + rj : r > 0}, the action of PSL_2(Z[w]),
// geodesics, and reduction into the fundamental domain of the Bianchi group.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "bianchi/cfrac.hpp"
#include "bianchi/error.hpp"
#include "bianchi/extended.hpp"
#include "bianchi/ring.hpp"

namespace bianchi {

template <typename Real>
struct BasicH3Point {
  Real x;
  Real y;
  Real r;
};

using H3Point = BasicH3Point<double>;

inline std::complex<double> horizontal(const H3Point& p) { return {p.x, p.y}; }

// 2x2 matrix over Z[w] with unit determinant, taken modulo +-I.
class MobiusMap {
 public:
  MobiusMap(RingElement a, RingElement b, RingElement c, RingElement d);

  static MobiusMap identity(Discriminant d);
  // S = [[0, 1], [-1, 0]]
  static MobiusMap S(Discriminant d);
  // T^q = [[1, q], [0, 1]]
  static MobiusMap T(const RingElement& q);
  // [[w, 0], [0, conj(w)]]; acts as z -> w^2 z. Only for d = 1, 3.
  static MobiusMap rotation(Discriminant d);

  Discriminant disc() const noexcept { return a_.disc(); }
  const RingElement& a() const noexcept { return a_; }
  const RingElement& b() const noexcept { return b_; }
  const RingElement& c() const noexcept { return c_; }
  const RingElement& d() const noexcept { return d_; }
  RingElement det() const;

  MobiusMap inverse() const;
  MobiusMap operator*(const MobiusMap& o) const;
  // Equality in PSL_2: entries agree up to a global sign.
  bool operator==(const MobiusMap& o) const;
  bool same_matrix(const MobiusMap& o) const;

 private:
  RingElement a_, b_, c_, d_;
};

// Point of the boundary C u {infinity}, exact.
class BoundaryPoint {
 public:
  static BoundaryPoint infinity(Discriminant d) { return BoundaryPoint(FieldElement(d), true); }
  BoundaryPoint(FieldElement z) : z_(std::move(z)), infinite_(false) {}  // NOLINT(implicit)

  bool is_infinity() const noexcept { return infinite_; }
  // Throws Error(precondition) at infinity.
  const FieldElement& value() const;
  bool operator==(const BoundaryPoint& o) const;

 private:
  BoundaryPoint(FieldElement z, bool inf) : z_(std::move(z)), infinite_(inf) {}
  FieldElement z_;
  bool infinite_;
};

// Exact action on the boundary; a/c for infinity, infinity for cz + d = 0.
BoundaryPoint act(const MobiusMap& g, const BoundaryPoint& z);

// Floating endpoint value (nullopt stands for infinity).
using Endpoint = std::optional<std::complex<double>>;

struct GeodesicLift {
  Endpoint attracting;
  Endpoint repelling;
  Discriminant d;
};

// Action on H^3:
//   den = |cz + d|^2 + |c|^2 r^2
//   z'  = ((az + b) conj(cz + d) + a conj(c) r^2) / den
//   r'  = r / den
template <typename Real>
BasicH3Point<Real> act(const MobiusMap& g, const BasicH3Point<Real>& p) {
  const auto [ar, ai] = embed_as<Real>(g.a());
  const auto [br, bi] = embed_as<Real>(g.b());
  const auto [cr, ci] = embed_as<Real>(g.c());
  const auto [dr, di] = embed_as<Real>(g.d());
  const Real r2 = p.r * p.r;
  // cz + d
  const Real ur = cr * p.x - ci * p.y + dr;
  const Real ui = cr * p.y + ci * p.x + di;
  // az + b
  const Real vr = ar * p.x - ai * p.y + br;
  const Real vi = ar * p.y + ai * p.x + bi;
  const Real den = ur * ur + ui * ui + (cr * cr + ci * ci) * r2;
  // (az + b) * conj(cz + d) + a * conj(c) * r^2
  const Real nr = vr * ur + vi * ui + (ar * cr + ai * ci) * r2;
  const Real ni = vi * ur - vr * ui + (ai * cr - ar * ci) * r2;
  return {Real(nr / den), Real(ni / den), Real(p.r / den)};
}

// Hyperbolic distance: 2 asinh(sqrt((|z1 - z2|^2 + (r1 - r2)^2) / (4 r1 r2))).
template <typename Real>
Real distance(const BasicH3Point<Real>& p, const BasicH3Point<Real>& q) {
  using std::asinh;
  using std::sqrt;
  const Real dx = p.x - q.x;
  const Real dy = p.y - q.y;
  const Real dr = p.r - q.r;
  return Real(2 * asinh(sqrt(Real((dx * dx + dy * dy + dr * dr) / (4 * p.r * q.r)))));
}

// Intersection of the geodesic from repelling alpha (|alpha| > 1 or infinity)
// to attracting beta (|beta| < 1) with the unit hemisphere.
H3Point hemisphere_intersection(const GeodesicLift& lift);

// Unit-speed position at time t along the lift, starting from a basepoint on
// it and moving toward the attracting endpoint.
H3Point geodesic_position(const GeodesicLift& lift, const H3Point& basepoint, double t);

// Generator words. A word (g_1, ..., g_k) maps p to g_k ... g_1 p.
enum class Generator { translate, invert, rotate };

struct WordToken {
  Generator kind;
  RingElement shift;  // translate only
};

MobiusMap word_to_map(const std::vector<WordToken>& word, Discriminant d);

template <typename Real>
struct Reduction {
  BasicH3Point<Real> point;
  std::vector<WordToken> word;
  std::size_t steps = 0;
  bool capped = false;  // iteration cap hit; point is the best seen
};

inline constexpr std::size_t kReductionCap = 10000;
inline constexpr double kHemisphereTolerance = 1e-12;

// Membership of z in the closed cell used by the fundamental domain (K_d' for
// d = 1, 3 and K_d otherwise), up to tol.
bool in_domain_cell(std::complex<double> z, Discriminant d, double tol);
// Whether p satisfies the fundamental domain inequalities up to tol.
bool in_fundamental_domain(const H3Point& p, Discriminant d, double tol);

namespace detail {

// Number of quarter/third turns by w^2 needed to bring z into K_d'.
template <typename Real>
int rotation_count(const Real& x, const Real& y, Discriminant d) {
  if (d.value() == 1) return x < 0 ? 1 : 0;
  // d = 3: w^2 rotates by 240 degrees. K_3' is arg in [30, 150] degrees.
  const double ang = std::atan2(static_cast<double>(RealTraits<Real>::to_double(y)),
                                static_cast<double>(RealTraits<Real>::to_double(x)));
  const double deg = ang * 180.0 / std::numbers::pi;
  auto inside = [](double a) {
    while (a < -180.0) a += 360.0;
    while (a > 180.0) a -= 360.0;
    return a >= 30.0 - 1e-9 && a <= 150.0 + 1e-9;
  };
  if (x == 0 && y == 0) return 0;
  for (int k = 0; k < 3; ++k) {
    if (inside(deg + 240.0 * k)) return k;
  }
  return 0;
}

}  // namespace detail

template <typename Real>
Reduction<Real> reduce_to_domain(const BasicH3Point<Real>& p, Discriminant d) {
  using std::sqrt;
  Reduction<Real> out{p, {}, 0, false};
  BasicH3Point<Real> cur = p;
  BasicH3Point<Real> best = p;
  std::size_t best_len = 0;
  const bool rotating = d.value() == 1 || d.value() == 3;
  const Real root = sqrt(Real(d.value()));
  // w^2 as a complex number: -1 for d = 1, conj(w) = (-1 - i sqrt 3)/2 for d = 3.
  const Real w2r = d.value() == 1 ? Real(-1) : Real(Real(-1) / 2);
  const Real w2i = d.value() == 1 ? Real(0) : Real(-root / 2);
  while (out.steps < kReductionCap) {
    ++out.steps;
    const auto [n, m] = nearest_coordinates<Real>(cur.x, cur.y, d);
    if (n != 0 || m != 0) {
      const RingElement a(d, n, m);
      const auto [ax, ay] = embed_as<Real>(a);
      cur.x -= ax;
      cur.y -= ay;
      out.word.push_back({Generator::translate, -a});
    }
    if (rotating) {
      const int k = detail::rotation_count(cur.x, cur.y, d);
      for (int i = 0; i < k; ++i) {
        const Real nx = w2r * cur.x - w2i * cur.y;
        const Real ny = w2r * cur.y + w2i * cur.x;
        cur.x = nx;
        cur.y = ny;
        out.word.push_back({Generator::rotate, RingElement(d)});
      }
    }
    if (cur.r > best.r) {
      best = cur;
      best_len = out.word.size();
    }
    const Real h = cur.x * cur.x + cur.y * cur.y + cur.r * cur.r;
    if (!(h < Real(1 - kHemisphereTolerance))) {
      out.point = cur;
      return out;
    }
    // S: z + rj -> (-conj(z) + rj) / (|z|^2 + r^2)
    cur.x = -cur.x / h;
    cur.y = cur.y / h;
    cur.r = cur.r / h;
    out.word.push_back({Generator::invert, RingElement(d)});
  }
  out.capped = true;
  out.point = best;
  out.word.erase(out.word.begin() + static_cast<std::ptrdiff_t>(best_len), out.word.end());
  return out;
}

// Exact product (T^{(-1)^{n-1} a_n} S) ... (T^{-a_2} S)(T^{a_1} S).
MobiusMap generator_product(const Expansion& e, std::size_t n);

// [[q_n, -p_n], [(-1)^{n-1} q_{n-1}, (-1)^n p_{n-1}]]; checks equality with the
// generator product and throws Error(numeric) if they differ.
MobiusMap p_matrix(const Expansion& e, std::size_t n);
// The same matrix without the check.
MobiusMap p_matrix_unchecked(const Expansion& e, std::size_t n);

}  // namespace bianchi
