#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppe {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;
using SymbolIndex = std::uint32_t;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Non-fatal findings collected while processing (filter truncation, coarse steps, ...).
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

/// Least-squares system too ill-conditioned to invert.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Requested SER cannot be reached because the noiseless link already exceeds it.
class InfeasibleTargetError : public std::runtime_error {
 public:
  InfeasibleTargetError(const std::string& what, double ser_floor)
      : std::runtime_error(what), ser_floor_(ser_floor) {}
  double ser_floor() const { return ser_floor_; }

 private:
  double ser_floor_;
};

/// Allocation would exceed the configured memory budget.
class MemoryBudgetError : public std::runtime_error {
 public:
  MemoryBudgetError(const std::string& what, std::size_t required_bytes)
      : std::runtime_error(what), required_bytes_(required_bytes) {}
  std::size_t required_bytes() const { return required_bytes_; }

 private:
  std::size_t required_bytes_;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

}  // namespace ppe
