#include "ppe/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppe/common.hpp"

namespace ppe {

bool divides(double step, double length) {
  if (!(step > 0.0) || !(length > 0.0)) return false;
  const double ratio = length / step;
  return std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio);
}

double FiberLink::alpha_per_km() const { return alpha_db_per_km * std::log(10.0) / 10.0; }

double FiberLink::beta2_s2_per_km() const {
  const double d = dispersion_ps_nm_km * 1e-12 / 1e-9;  // s/m/km
  const double lambda = wavelength_nm * 1e-9;
  return -d * lambda * lambda / (2.0 * kPi * kSpeedOfLight);
}

std::size_t FiberLink::position_count() const {
  return static_cast<std::size_t>(std::llround(total_length_km() / dz_km));
}

std::vector<double> FiberLink::positions_km() const {
  std::vector<double> z(position_count());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = static_cast<double>(k) * dz_km;
  return z;
}

void FiberLink::validate() const {
  if (!(span_length_km > 0.0) || span_count < 1)
    throw std::invalid_argument("FiberLink: need positive span length and count");
  if (!(alpha_db_per_km >= 0.0)) throw std::invalid_argument("FiberLink: alpha must be >= 0");
  if (!(gamma_per_w_km >= 0.0)) throw std::invalid_argument("FiberLink: gamma must be >= 0");
  if (!(wavelength_nm > 0.0)) throw std::invalid_argument("FiberLink: wavelength must be > 0");
  if (!divides(dz_km, total_length_km()))
    throw std::invalid_argument("FiberLink: dz does not divide the link length");
}

}  // namespace ppe
