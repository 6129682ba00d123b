#pragma once

#include <stdexcept>
#include <string>

namespace bianchi {

enum class ErrorKind {
  invalid_argument,   // malformed input, unsupported discriminant
  precondition,       // input outside the domain of an operation
  division_by_zero,   // exact arithmetic hit a zero denominator
  not_converged,      // iteration cap reached
  numeric,            // floating evaluation left its trusted range
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace bianchi
