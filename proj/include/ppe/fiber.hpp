#pragma once

#include <cstddef>
#include <vector>

namespace ppe {

/// Multi-span amplified link. Every span ends in a noiseless amplifier that
/// restores the launch power.
struct FiberLink {
  double span_length_km = 80.0;
  int span_count = 3;
  double alpha_db_per_km = 0.2;
  double dispersion_ps_nm_km = 17.0;
  double gamma_per_w_km = 1.3;
  double wavelength_nm = 1550.0;
  double dz_km = 1.0;  ///< spatial step of the estimated profile

  double total_length_km() const { return span_length_km * span_count; }
  /// Power attenuation coefficient in 1/km.
  double alpha_per_km() const;
  /// beta2 = -D lambda^2 / (2 pi c), in s^2/km.
  double beta2_s2_per_km() const;
  /// L / dz.
  std::size_t position_count() const;
  /// {0, dz, ..., L - dz}
  std::vector<double> positions_km() const;
  /// Throws unless the link is physically and geometrically consistent.
  void validate() const;
};

/// True when `step` divides `length` to within rounding.
bool divides(double step, double length);

}  // namespace ppe
