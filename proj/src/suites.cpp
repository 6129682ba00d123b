#include "bianchi/suites.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bianchi/cfrac.hpp"
#include "bianchi/evt.hpp"
#include "bianchi/hyperbolic.hpp"

namespace bianchi {

namespace {

constexpr std::uint64_t kStreamIdentities = 10;
constexpr std::uint64_t kStreamGeometry = 11;

const char* const kIdentityNames[] = {"determinant", "norm_growth", "reversed", "generators",
                                      "defect",      "endpoints",   "product",  "reconstruction"};
const char* const kGeometryNames[] = {"hemisphere", "group_action", "isometry", "reduction"};

struct Tally {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst = 0;

  void add(bool ok, double err = 0) {
    ++trials;
    failures += !ok;
    worst = std::max(worst, err);
  }
};

SuiteReport merge(Discriminant d, std::size_t samples, const char* const* names, std::size_t k,
                  const std::vector<std::vector<Tally>>& per_sample) {
  SuiteReport r;
  r.d = d.value();
  r.samples = samples;
  for (std::size_t j = 0; j < k; ++j) {
    CheckCount c;
    c.name = names[j];
    for (const auto& s : per_sample) {
      c.trials += s[j].trials;
      c.failures += s[j].failures;
      c.worst = std::max(c.worst, s[j].worst);
    }
    r.checks.push_back(c);
  }
  return r;
}

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1p-53;
}

long small_int(Rng& rng, long range) { return static_cast<long>(rng() % static_cast<std::uint64_t>(2 * range + 1)) - range; }

MobiusMap random_map(Rng& rng, Discriminant d, int length) {
  MobiusMap m = MobiusMap::identity(d);
  for (int i = 0; i < length; ++i) {
    m = MobiusMap::T(RingElement(d, small_int(rng, 2), small_int(rng, 2))) * m;
    if (rng() & 1) m = MobiusMap::S(d) * m;
  }
  return m;
}

H3Point random_point(Rng& rng) { return {uniform(rng, -2, 2), uniform(rng, -2, 2), std::exp(uniform(rng, -2, 1))}; }

}  // namespace

std::size_t SuiteReport::failures() const {
  std::size_t f = 0;
  for (const CheckCount& c : checks) f += c.failures;
  return f;
}

SuiteReport identity_suite(Discriminant d, std::size_t count, unsigned bits, std::size_t n_max, std::uint64_t seed,
                           unsigned threads) {
  constexpr std::size_t K = std::size(kIdentityNames);
  std::vector<std::vector<Tally>> tallies(count, std::vector<Tally>(K));
  const RingElement one(d, 1, 0);
  parallel_for(count, threads, [&](std::size_t i) {
    auto& t = tallies[i];
    Rng rng = sample_rng(seed, kStreamIdentities, i);
    const FieldElement beta = sample_exact_cell(d, bits, rng);
    const Expansion e = expand(beta, n_max);
    const std::size_t N = e.size();
    MobiusMap word = MobiusMap::identity(d);
    mpq_class product = 1;
    for (std::size_t n = 0; n <= N; ++n) {
      const long k = static_cast<long>(n);
      const RingElement det = e.p(k - 1) * e.q(k) - e.p(k) * e.q(k - 1);
      t[0].add(det == (n % 2 == 0 ? one : -one));
      const FieldElement approx = FieldElement(e.q(k)) * beta - FieldElement(e.p(k));
      product *= e.iterate(n).norm();
      t[6].add(approx.norm() == product);
      if (n == 0) continue;
      t[1].add(e.q(k - 1).norm() < e.q(k).norm());
      std::vector<RingElement> rev;
      rev.reserve(n - 1);
      for (std::size_t j = n - 1; j >= 1; --j) rev.push_back(e.digit(j));
      const FieldElement rho(e.q(k), e.q(k - 1));
      t[2].add(evaluate_with_leading(e.digit(n), rev) == rho);
      const RingElement a = n % 2 == 1 ? e.digit(n) : RingElement(-e.digit(n));
      word = MobiusMap::T(a) * MobiusMap::S(d) * word;
      const MobiusMap P = p_matrix_unchecked(e, n);
      t[3].add(word == P);
      if (n + 1 <= N) t[4].add(approximation_defect(e, n) == 1);
      const FieldElement gn = e.iterate(n);
      const bool ends = act(P, BoundaryPoint(beta)) == BoundaryPoint(n % 2 == 0 ? gn : -gn) &&
                        act(P, BoundaryPoint::infinity(d)) == BoundaryPoint(n % 2 == 1 ? rho : -rho);
      t[5].add(ends);
    }
    if (N >= 1) t[3].add(generator_product(e, N) == word);
    if (e.terminated()) t[7].add(FieldElement(e.p(static_cast<long>(N)), e.q(static_cast<long>(N))) == beta);
  });
  return merge(d, count, kIdentityNames, K, tallies);
}

SuiteReport geometry_suite(Discriminant d, std::size_t count, std::uint64_t seed, unsigned threads) {
  constexpr std::size_t K = std::size(kGeometryNames);
  std::vector<std::vector<Tally>> tallies(count, std::vector<Tally>(K));
  parallel_for(count, threads, [&](std::size_t i) {
    auto& t = tallies[i];
    Rng rng = sample_rng(seed, kStreamGeometry, i);

    const std::complex<double> beta = sample_uniform_cell(d, rng);
    const std::complex<double> alpha =
        std::polar(1.0 / std::sqrt(uniform(rng, 1e-3, 1.0)), uniform(rng, -std::numbers::pi, std::numbers::pi));
    const H3Point h = hemisphere_intersection(GeodesicLift{beta, alpha, d});
    const double sphere = std::abs(std::norm(horizontal(h)) + h.r * h.r - 1.0);
    t[0].add(sphere <= 1e-12, sphere);

    const MobiusMap a = random_map(rng, d, 3);
    const MobiusMap b = random_map(rng, d, 3);
    const H3Point p = random_point(rng);
    const H3Point q = random_point(rng);
    const H3Point lhs = act(a * b, p);
    const H3Point rhs = act(a, act(b, p));
    const double e_h = std::abs(horizontal(lhs) - horizontal(rhs)) / (1 + std::abs(horizontal(rhs)));
    const double e_r = std::abs(lhs.r - rhs.r) / rhs.r;
    t[1].add(e_h <= 1e-10 && e_r <= 1e-10, std::max(e_h, e_r));
    const double dist = distance(p, q);
    const double e_d = std::abs(distance(act(a, p), act(a, q)) - dist) / (1 + dist);
    t[2].add(e_d <= 1e-10, e_d);

    const H3Point start{uniform(rng, -5, 5), uniform(rng, -5, 5), std::exp(uniform(rng, -6, 1))};
    const auto red = reduce_to_domain(start, d);
    t[3].add(!red.capped && in_fundamental_domain(red.point, d, 1e-10));
  });
  return merge(d, count, kGeometryNames, K, tallies);
}

}  // namespace bianchi
