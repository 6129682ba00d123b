#pragma once

// Batch checks of the exact identities and the geometric invariants on
// random inputs. Each check counts trials and failures.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bianchi/ring.hpp"

namespace bianchi {

struct CheckCount {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst = 0;  // largest observed error, for tolerance checks
};

struct SuiteReport {
  int d = 1;
  std::size_t samples = 0;
  std::vector<CheckCount> checks;

  std::size_t failures() const;
};

// For `count` random exact betas with `bits`-bit coordinates, expanded to at
// most n_max digits:
//   determinant    p_{n-1} q_n - p_n q_{n-1} = (-1)^n
//   norm_growth    N(q_{n-1}) < N(q_n)
//   reversed       [a_n; a_{n-1}, ..., a_1] = q_n / q_{n-1}
//   generators     (T^{(-1)^{n-1} a_n} S) ... (T^{a_1} S) equals the P(n, beta) matrix
//   defect         approximation_defect = 1
//   endpoints      P(n, beta) beta = (-1)^n G^n(beta), P(n, beta) inf = (-1)^{n-1} q_n / q_{n-1}
//   product        N(q_n beta - p_n) = prod_{k<=n} N(G^k(beta))
//   reconstruction p_N / q_N = beta for terminated expansions
SuiteReport identity_suite(Discriminant d, std::size_t count, unsigned bits, std::size_t n_max, std::uint64_t seed,
                           unsigned threads = 1);

// `count` random inputs per check:
//   hemisphere    |z|^2 + r^2 = 1 within 1e-12 for lifts with beta in K_d, |alpha| > 1
//   group_action  (gh).p = g.(h.p) within 1e-10 (relative)
//   isometry      d(gp, gq) = d(p, q) within 1e-10 (relative)
//   reduction     reduce_to_domain lands in the fundamental domain within 1e-10
SuiteReport geometry_suite(Discriminant d, std::size_t count, std::uint64_t seed, unsigned threads = 1);

}  // namespace bianchi
