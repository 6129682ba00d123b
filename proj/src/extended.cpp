#include "bianchi/extended.hpp"

#include <cmath>

namespace bianchi {

PrecisionScope::PrecisionScope(unsigned mantissa_bits) : saved_digits10_(ExtReal::default_precision()) {
  const auto digits = static_cast<unsigned>(std::ceil(mantissa_bits * 0.30102999566398120)) + 1;
  ExtReal::default_precision(digits);
}

PrecisionScope::~PrecisionScope() { ExtReal::default_precision(saved_digits10_); }

}  // namespace bianchi
