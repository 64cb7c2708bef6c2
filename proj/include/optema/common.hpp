#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace optema {

using Vector = std::vector<double>;

/// Invalid hyperparameters, unknown config keys, dimension mismatches.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A single optimizer step could not be taken (e.g. non-finite gradient).
class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments to a numerical helper (negative sequence entries, too few
/// fit points, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A trajectory checker was handed a trajectory it cannot evaluate.
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

/// Running sum that switches to Neumaier compensation on request.
/// In plain mode it is bit-identical to `sum += x`.
struct RunningSum {
  double sum = 0.0;
  double compensation = 0.0;

  void add(double x, bool compensate) {
    if (!compensate) {
      sum += x;
      return;
    }
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      compensation += (sum - t) + x;
    } else {
      compensation += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + compensation; }
};

}  // namespace optema
