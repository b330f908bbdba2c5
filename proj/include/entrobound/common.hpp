#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace entrobound {

// Error taxonomy, mapped to CLI exit codes (2/3/4).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};
struct GuardError : std::runtime_error {
  explicit GuardError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class LogBase { Natural, Base2 };

inline double log_base_divisor(LogBase b) {
  return b == LogBase::Natural ? 1.0 : std::log(2.0);
}

inline std::string log_base_name(LogBase b) {
  return b == LogBase::Natural ? "natural" : "base2";
}

// log(1 + e^z) without overflow.
inline double softplus(double z) {
  if (std::isinf(z)) return z > 0 ? z : 0.0;
  if (z > 36.0) return z + std::log1p(std::exp(-z));
  if (z < -36.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// x * log(1 + c/x) with the limit value 0 at x = 0.
inline double xlog1p_ratio(double x, double c) {
  if (x <= 0.0 || c <= 0.0) return 0.0;
  double r = c / x;
  if (r < 1e12) return x * std::log1p(r);
  return x * (std::log(c) - std::log(x));
}

}  // namespace entrobound
