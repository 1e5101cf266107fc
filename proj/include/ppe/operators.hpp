#pragma once

#include <span>
#include <vector>

#include "ppe/common.hpp"
#include "ppe/fiber.hpp"
#include "ppe/waveform.hpp"

namespace ppe {

/// Frequency response of the linear (dispersion) operator over a length of
/// fiber with constant beta2. Under the forward DFT kernel exp(-j w t) the
/// lossless linear part of the NLSE propagates as exp(+j beta2 w^2 z / 2),
/// which is exp(-j w^2/2 * int beta2 dz) written with the opposite kernel.
class DispersionKernel {
 public:
  DispersionKernel(std::size_t n, double sample_period, double beta2_s2_per_km);

  /// Multiplies a spectrum by the response of `length_km` of fiber
  /// (negative lengths give the inverse operator).
  void apply(std::span<Complex> spectrum, double length_km) const;

  /// Precomputed response for a fixed length, including an optional
  /// amplitude factor (used for loss in the split-step loop).
  std::vector<Complex> response(double length_km, double amplitude = 1.0) const;

  std::size_t size() const { return half_beta2_omega2_.size(); }

 private:
  std::vector<double> half_beta2_omega2_;  // beta2 w^2 / 2, per km
};

/// D_{z1 z2}[wave]: all-pass, energy preserving.
Waveform dispersion_operator(const Waveform& wave, const FiberLink& link, double z1_km,
                             double z2_km);

/// Same operator over an arbitrary signed length of the link's fiber.
ComplexVector disperse(std::span<const Complex> samples, double sample_period,
                       const FiberLink& link, double length_km);

/// N[x] = |x|^2 x, sample-wise.
ComplexVector nonlinear_operator(std::span<const Complex> samples);

}  // namespace ppe
