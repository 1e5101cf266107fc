#include "ppe/operators.hpp"

#include <algorithm>

#include "ppe/fft.hpp"

namespace ppe {

DispersionKernel::DispersionKernel(std::size_t n, double sample_period, double beta2_s2_per_km) {
  const auto omega = fft::angular_frequencies(n, sample_period);
  half_beta2_omega2_.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    half_beta2_omega2_[k] = 0.5 * beta2_s2_per_km * omega[k] * omega[k];
}

void DispersionKernel::apply(std::span<Complex> spectrum, double length_km) const {
  if (spectrum.size() != half_beta2_omega2_.size())
    throw std::invalid_argument("DispersionKernel: spectrum length mismatch");
  if (length_km == 0.0) return;
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    spectrum[k] *= std::polar(1.0, half_beta2_omega2_[k] * length_km);
}

std::vector<Complex> DispersionKernel::response(double length_km, double amplitude) const {
  std::vector<Complex> h(half_beta2_omega2_.size());
  for (std::size_t k = 0; k < h.size(); ++k)
    h[k] = std::polar(amplitude, half_beta2_omega2_[k] * length_km);
  return h;
}

ComplexVector disperse(std::span<const Complex> samples, double sample_period,
                       const FiberLink& link, double length_km) {
  ComplexVector x(samples.begin(), samples.end());
  if (length_km == 0.0 || link.dispersion_ps_nm_km == 0.0) return x;
  const DispersionKernel kernel(x.size(), sample_period, link.beta2_s2_per_km());
  fft::forward(x);
  kernel.apply(x, length_km);
  fft::inverse(x);
  return x;
}

Waveform dispersion_operator(const Waveform& wave, const FiberLink& link, double z1_km,
                             double z2_km) {
  if (!(z1_km >= 0.0 && z1_km <= z2_km && z2_km <= link.total_length_km() * (1.0 + 1e-12)))
    throw std::invalid_argument("dispersion_operator: need 0 <= z1 <= z2 <= L");
  Waveform out{disperse(wave.samples, wave.sample_period, link, z2_km - z1_km),
               wave.sample_period, z2_km};
  return out;
}

ComplexVector nonlinear_operator(std::span<const Complex> samples) {
  ComplexVector out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [](Complex s) { return std::norm(s) * s; });
  return out;
}

}  // namespace ppe
