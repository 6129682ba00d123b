#pragma once

// Nearest-integer continued fractions over Z[w].
//
// For z in the cell K_d (points strictly closer to 0 than to any other
// lattice point) the Gauss map is G(z) = 1/z - [1/z], where [.] is the
// nearest lattice point. Iterating gives digits a_n = [1/G^{n-1}(z)] and
// convergents p_n / q_n through
//
//   p_{-2} = 0, p_{-1} = 1, q_{-2} = 1, q_{-1} = 0,
//   p_n = a_n p_{n-1} + p_{n-2},  q_n = a_n q_{n-1} + q_{n-2}   (a_0 = 0).

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "bianchi/ring.hpp"

namespace bianchi {

// Strict membership in K_d.
bool in_cell(std::complex<double> z, Discriminant d);
bool in_cell(const FieldElement& z);
// Membership in the closure of K_d; the floating version accepts points
// within `tol` of the closure.
bool in_cell_closure(std::complex<double> z, Discriminant d, double tol = 0.0);
bool in_cell_closure(const FieldElement& z);

struct GaussStep {
  RingElement digit;
  FieldElement next;
};

struct FloatGaussStep {
  RingElement digit;
  std::complex<double> next;
};

// One step of the Gauss map. Returns nullopt for z = 0, where a rational
// expansion terminates.
std::optional<GaussStep> gauss_step(const FieldElement& z);
std::optional<FloatGaussStep> gauss_step(std::complex<double> z, Discriminant d);

class Expansion {
 public:
  using Beta = std::variant<FieldElement, std::complex<double>>;

  Discriminant disc() const noexcept { return d_; }
  const Beta& beta() const noexcept { return beta_; }
  bool is_exact() const noexcept { return std::holds_alternative<FieldElement>(beta_); }
  // Throws Error(precondition) for a floating expansion.
  const FieldElement& exact_beta() const;

  // Number of digits N.
  std::size_t size() const noexcept { return digits_.size(); }
  bool terminated() const noexcept { return terminated_; }
  // Floating mode: set when an iterate left closure(K_d) by more than the
  // tolerance; the step index is recorded.
  bool precision_loss() const noexcept { return precision_loss_; }
  std::size_t precision_loss_step() const noexcept { return precision_loss_step_; }

  const std::vector<RingElement>& digits() const noexcept { return digits_; }
  // a_n for 1 <= n <= N.
  const RingElement& digit(std::size_t n) const;
  // p_n, q_n for -2 <= n <= N.
  const RingElement& p(long n) const;
  const RingElement& q(long n) const;

  // G^n(beta) for 0 <= n <= N; exact mode only.
  FieldElement iterate(std::size_t n) const;
  // G^n(beta) in double precision (either mode).
  std::complex<double> iterate_approx(std::size_t n) const;

 private:
  friend Expansion expand(const FieldElement& beta, std::size_t max_digits);
  friend Expansion expand(std::complex<double> beta, Discriminant d, std::size_t max_digits);

  Expansion(Discriminant d, Beta beta);
  void push_digit(RingElement a);

  Discriminant d_;
  Beta beta_;
  std::vector<RingElement> digits_;
  std::vector<RingElement> p_;  // index n + 2
  std::vector<RingElement> q_;
  // Exact mode: G^n(beta) = remainders_[n].first / remainders_[n].second.
  std::vector<std::pair<RingElement, RingElement>> remainders_;
  std::vector<std::complex<double>> float_iterates_;
  bool terminated_ = false;
  bool precision_loss_ = false;
  std::size_t precision_loss_step_ = 0;
};

// Expands beta (which must lie in closure(K_d)) up to max_digits digits or
// termination. Throws Error(precondition) otherwise.
Expansion expand(const FieldElement& beta, std::size_t max_digits);
Expansion expand(std::complex<double> beta, Discriminant d, std::size_t max_digits);

// Distance tolerance used to flag loss of precision in floating mode.
inline constexpr double kFloatCellTolerance = 1e-9;

// [0; a_1, ..., a_n] by backward recurrence. With check_admissible every tail
// [0; a_k, ..., a_n] must lie in closure(K_d), otherwise Error(precondition).
// A vanishing intermediate denominator throws Error(division_by_zero).
FieldElement evaluate(std::span<const RingElement> digits, Discriminant d, bool check_admissible = true);

// leading + [0; digits...], without admissibility checks; evaluates
// continued fractions such as [a_n, a_{n-1}, ..., a_1] = q_n / q_{n-1}.
FieldElement evaluate_with_leading(const RingElement& leading, std::span<const RingElement> digits);

// N(q_n) * N(beta q_n - p_n) * N(G^{n+1}(beta) + q_{n+1}/q_n), exactly. The
// value is identically 1; requires an exact expansion with at least n + 1
// digits (Error(precondition) otherwise).
mpq_class approximation_defect(const Expansion& expansion, std::size_t n);

// Streaming exact Gauss orbit for Monte Carlo work. Keeps G^n(beta) as a pair
// of ring elements and never reduces fractions; rounding is decided in double
// precision and re-decided exactly whenever two candidates are within the
// floating error bound of each other.
class ExactOrbit {
 public:
  explicit ExactOrbit(const FieldElement& beta, bool track_denominators = false);

  // Applies one Gauss step. Returns false (and leaves the state unchanged)
  // once G^n(beta) = 0.
  bool advance();

  std::size_t index() const noexcept { return n_; }
  bool finished() const;

  // a_n as integer coordinates and |a_n|.
  const RingElement& digit() const noexcept { return digit_; }
  double digit_abs() const noexcept { return digit_abs_; }

  // G^n(beta) in double precision.
  std::complex<double> iterate_approx() const;
  // G^n(beta) exactly (reduces a fraction; not for hot loops).
  FieldElement iterate() const;

  // Available when tracking denominators.
  RingElement q() const;       // q_n
  RingElement q_prev() const;  // q_{n-1}
  // log |q_n| and q_n / q_{n-1} from the leading bits of the exact values.
  double log_abs_q() const;
  double log_abs_q_prev() const;
  std::complex<double> q_ratio() const;

  // Number of steps that needed the exact tie-break.
  std::size_t exact_decisions() const noexcept { return exact_decisions_; }

 private:
  // Nearest lattice point to v_ / u_, as small integer coordinates when they
  // fit; otherwise falls back to the exact search and returns false.
  bool choose_small_digit(long& n, long& m);

  Discriminant d_;
  // G^n(beta) = (un_ + um_ w) / (vn_ + vm_ w)
  mpz_class un_, um_, vn_, vm_;
  // q_n and q_{n-1}
  mpz_class qn_, qm_, qpn_, qpm_;
  RingElement digit_;
  double digit_abs_ = 0.0;
  std::size_t n_ = 0;
  bool track_ = false;
  std::size_t exact_decisions_ = 0;
};

// Approximate value of a ring element as mantissa * 2^exponent; accurate to a
// few ulp for arbitrarily large coordinates.
struct ScaledComplex {
  std::complex<double> mantissa;
  long exponent = 0;
};
ScaledComplex scaled_approx(const RingElement& x);
// log |x| for nonzero x, from 0.5 * log N(x).
double log_abs(const RingElement& x);
// x / y in double precision for large ring elements.
std::complex<double> ratio_approx(const RingElement& x, const RingElement& y);

}  // namespace bianchi
