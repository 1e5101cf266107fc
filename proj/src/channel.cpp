#include "ppe/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ppe/fft.hpp"
#include "ppe/operators.hpp"

namespace ppe {

Waveform ssfm_propagate(const Waveform& wave, const FiberLink& link, const SsfmConfig& config,
                        Diagnostics* diagnostics) {
  wave.validate();
  link.validate();
  if (!divides(config.step_km, link.span_length_km))
    throw std::invalid_argument("ssfm_propagate: step does not divide the span length");

  const auto steps = static_cast<std::size_t>(std::llround(link.span_length_km / config.step_km));
  const double h = link.span_length_km / static_cast<double>(steps);
  const double alpha = link.alpha_per_km();
  const double gamma = link.gamma_per_w_km;
  const DispersionKernel kernel(wave.size(), wave.sample_period, link.beta2_s2_per_km());
  const double half_loss = std::exp(-0.25 * alpha * h);  // amplitude over h/2
  const auto half_step = kernel.response(0.5 * h, half_loss);
  const auto full_step = kernel.response(h, half_loss * half_loss);
  const double amplifier_gain = std::exp(0.5 * alpha * link.span_length_km);

  auto multiply = [](ComplexVector& x, const std::vector<Complex>& by) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] *= by[k];
  };

  ComplexVector x = wave.samples;
  double worst_phase = 0.0;
  for (int span = 0; span < link.span_count; ++span) {
    fft::forward(x);
    multiply(x, half_step);
    for (std::size_t step = 0; step < steps; ++step) {
      fft::inverse(x);
      double peak = 0.0;
      for (auto& s : x) {
        const double p = std::norm(s);
        peak = std::max(peak, p);
        s *= std::polar(1.0, gamma * p * h);
      }
      worst_phase = std::max(worst_phase, gamma * peak * h);
      fft::forward(x);
      multiply(x, step + 1 == steps ? half_step : full_step);
    }
    fft::inverse(x);
    for (auto& s : x) s *= amplifier_gain;
  }

  for (const auto& s : x)
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw std::runtime_error("ssfm_propagate: field diverged (non-finite samples)");
  if (diagnostics && worst_phase > config.max_phase_per_step) {
    std::ostringstream msg;
    msg << "ssfm_propagate: peak nonlinear phase per step " << worst_phase << " rad exceeds "
        << config.max_phase_per_step << " rad; reduce the step";
    diagnostics->warn(msg.str());
  }
  return Waveform{std::move(x), wave.sample_period, link.total_length_km()};
}

Waveform add_awgn(const Waveform& wave, const NoiseSpec& noise) {
  if (!(noise.n0 >= 0.0)) throw std::invalid_argument("add_awgn: n0 must be >= 0");
  if (noise.n0 == 0.0) return wave;
  const double sigma = std::sqrt(0.5 * noise_variance(noise.n0, wave.sample_period));
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Waveform out = wave;
  for (auto& s : out.samples) {
    const double re = normal(rng);
    const double im = normal(rng);
    s += Complex{sigma * re, sigma * im};
  }
  return out;
}

Calibration n0_for_target_ser(const ConstellationSpec& spec, double target_ser,
                              const std::function<double(double)>& measure_ser,
                              const CalibrationOptions& options) {
  if (!(target_ser > 0.0 && target_ser <= 0.3))
    throw std::invalid_argument("n0_for_target_ser: target SER must be in (0, 0.3]");
  if (!(options.symbol_energy > 0.0))
    throw std::invalid_argument("n0_for_target_ser: symbol energy must be > 0");

  const double tol = options.relative_tolerance * target_ser;
  Calibration best{0.0, 0.0, 0};
  double best_error = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  auto evaluate = [&](double n0) {
    const double ser = measure_ser(n0);
    ++evaluations;
    const double err = std::abs(ser - target_ser);
    if (err < best_error) {
      best_error = err;
      best = {n0, ser, evaluations};
    }
    return ser;
  };

  const double floor_ser = evaluate(0.0);
  if (floor_ser > target_ser + tol) {
    std::ostringstream msg;
    msg << "n0_for_target_ser: target SER " << target_ser << " is below the noiseless SER floor "
        << floor_ser;
    throw InfeasibleTargetError(msg.str(), floor_ser);
  }
  if (best_error <= tol) return {0.0, floor_ser, evaluations};

  double n0 = options.symbol_energy / es_over_n0_for_ser(spec.order, target_ser);
  double lo = 0.0;  // SER below target
  double hi = 0.0;  // SER above target
  double ser = evaluate(n0);
  while (ser < target_ser && evaluations < options.max_evaluations) {
    lo = n0;
    n0 *= 2.0;
    ser = evaluate(n0);
  }
  if (ser >= target_ser) hi = n0;
  if (lo == 0.0) {
    n0 = hi;
    while (ser >= target_ser && evaluations < options.max_evaluations) {
      hi = n0;
      n0 *= 0.5;
      ser = evaluate(n0);
    }
    lo = n0;
  }
  while (best_error > tol && evaluations < options.max_evaluations && hi > 0.0) {
    n0 = std::sqrt(lo * hi);
    ser = evaluate(n0);
    (ser < target_ser ? lo : hi) = n0;
    if (hi / lo < 1.0 + 1e-12) break;
  }
  best.evaluations = evaluations;
  if (best_error > tol) {
    std::ostringstream msg;
    msg << "n0_for_target_ser: closest measured SER " << best.measured_ser << " misses target "
        << target_ser << " by more than " << options.relative_tolerance * 100.0 << "%";
    throw std::runtime_error(msg.str());
  }
  return best;
}

double reference_gamma_prime(const FiberLink& link, double p0_dbm, double z_km) {
  const double spans = std::floor(z_km / link.span_length_km + 1e-9);
  const double within = std::max(0.0, z_km - spans * link.span_length_km);
  return link.gamma_per_w_km * dbm_to_watts(p0_dbm) * std::exp(-link.alpha_per_km() * within);
}

ReferenceProfile reference_profile(const FiberLink& link, double p0_dbm) {
  ReferenceProfile profile;
  profile.positions_km = link.positions_km();
  profile.gamma_prime.reserve(profile.positions_km.size());
  for (double z : profile.positions_km)
    profile.gamma_prime.push_back(reference_gamma_prime(link, p0_dbm, z));
  return profile;
}

}  // namespace ppe
