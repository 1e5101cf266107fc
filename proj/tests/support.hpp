#pragma once

#include <cmath>
#include <complex>
#include <span>

namespace testing {

inline double relative_l2(std::span<const std::complex<double>> a,
                          std::span<const std::complex<double>> b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

inline double energy(std::span<const std::complex<double>> x) {
  double e = 0.0;
  for (auto s : x) e += std::norm(s);
  return e;
}

// Binomial standard deviation of an estimated probability.
inline double binomial_sigma(double p, double trials) { return std::sqrt(p * (1.0 - p) / trials); }

}  // namespace testing
