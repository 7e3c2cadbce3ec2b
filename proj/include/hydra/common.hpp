#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace hydra {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files; message carries "path:line".
struct ParseError : Error {
  using Error::Error;
};

// Violated preconditions or inconsistent data (dimensions, ranges, ...).
struct ValidationError : Error {
  using Error::Error;
};

// Nonfinite values, divergence, singular block diagonals.
struct NumericError : Error {
  using Error::Error;
};

// Iterative estimate did not reach its tolerance within the iteration cap.
struct ConvergenceError : Error {
  using Error::Error;
};

// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

inline void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError("nonfinite value: " + what);
}

}  // namespace hydra
