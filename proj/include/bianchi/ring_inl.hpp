#pragma once

#include <cmath>
#include <tuple>
#include <utility>

namespace bianchi {

namespace detail {

inline long long small_norm(long n, long m, const Discriminant& d) {
  const long long nn = n;
  const long long mm = m;
  return nn * nn + d.omega_trace() * nn * mm + d.omega_norm() * mm * mm;
}

}  // namespace detail

template <typename Real>
std::pair<long, long> nearest_coordinates(const Real& x, const Real& y, Discriminant d) {
  using std::floor;
  using std::sqrt;
  const bool hex = d.three_mod_four();
  const Real root = sqrt(Real(d.value()));
  const Real im = hex ? Real(root / 2) : root;
  // Coordinates of x + iy in the basis {1, w}.
  const Real t = y / im;
  const Real s = hex ? Real(x + t / 2) : x;
  const long s0 = static_cast<long>(floor(Real(s + Real(0.5))));
  const long t0 = static_cast<long>(floor(Real(t + Real(0.5))));

  // Rounding in a reduced basis leaves the true nearest point within one
  // coordinate step for all five lattices.
  bool have = false;
  Real best_dist{};
  std::tuple<long long, long, long> best_key{};
  for (long dn = -1; dn <= 1; ++dn) {
    for (long dm = -1; dm <= 1; ++dm) {
      const long n = s0 + dn;
      const long m = t0 + dm;
      const Real ax = hex ? Real(Real(n) - Real(m) / 2) : Real(n);
      const Real ay = Real(m) * im;
      const Real ex = x - ax;
      const Real ey = y - ay;
      const Real dist = ex * ex + ey * ey;
      const auto key = std::make_tuple(detail::small_norm(n, m, d), n, m);
      if (!have || dist < best_dist || (dist == best_dist && key < best_key)) {
        have = true;
        best_dist = dist;
        best_key = key;
      }
    }
  }
  return {std::get<1>(best_key), std::get<2>(best_key)};
}

}  // namespace bianchi
