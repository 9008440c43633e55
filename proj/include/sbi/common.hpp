#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sbi {

// Sentinel standing in for log(0). Large enough in magnitude that exp() of any
// delta against it underflows to 0, small enough that arithmetic on it stays finite.
inline constexpr double kLogZero = -1.0e300;

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Recoverable signal: a simulator/solver did not converge at this parameter draw.
struct SimulationFailure : std::runtime_error {
  explicit SimulationFailure(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

inline void check_finite(double x, const std::string& where) {
  if (!std::isfinite(x)) throw NumericError("non-finite value in " + where);
}

}  // namespace sbi
