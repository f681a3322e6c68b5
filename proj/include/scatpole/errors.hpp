#pragma once

#include <stdexcept>
#include <string>

namespace scatpole {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

/// Upward Hankel recurrence left the double range before reaching the
/// requested order.
struct OverflowError : Error {
  int order;
  OverflowError(int order_, const std::string& msg) : Error(msg), order(order_) {}
};

/// kappa*R hit a zero of h_n^{(1)} or of delta_n; carries which factor
/// vanished so callers can jitter the evaluation point.
struct CoefficientPoleError : Error {
  int n;
  char factor;  // 'h' (h_n = 0) or 'z' (delta_n = 0)
  CoefficientPoleError(int n_, char factor_, const std::string& msg)
      : Error(msg), n(n_), factor(factor_) {}
};

struct ParseError : Error {
  long line;
  ParseError(long line_, const std::string& msg)
      : Error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct ValidationError : Error {
  using Error::Error;
};

struct SingularMatrixError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace scatpole
