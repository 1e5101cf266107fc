#include "ppe/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ppe/fft.hpp"

namespace ppe {

double Waveform::power() const {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += std::norm(s);
  return sum / static_cast<double>(samples.size());
}

void Waveform::validate() const {
  if (samples.size() < 2) throw std::invalid_argument("Waveform: need at least 2 samples");
  if (!(sample_period > 0.0)) throw std::invalid_argument("Waveform: sample period must be > 0");
  if (!std::isfinite(power())) throw std::invalid_argument("Waveform: non-finite samples");
}

void ShapingConfig::validate() const {
  if (samples_per_symbol < 2)
    throw std::invalid_argument("ShapingConfig: samples_per_symbol must be >= 2");
  if (!(rolloff > 0.0 && rolloff <= 1.0))
    throw std::invalid_argument("ShapingConfig: rolloff must be in (0, 1]");
  if (filter_span_symbols < 1)
    throw std::invalid_argument("ShapingConfig: filter span must be >= 1 symbol");
  if (!(symbol_rate > 0.0)) throw std::invalid_argument("ShapingConfig: symbol rate must be > 0");
}

SymbolFrame generate_symbols(std::shared_ptr<const ConstellationSpec> spec, std::size_t count,
                             std::uint64_t seed) {
  if (!spec) throw std::invalid_argument("generate_symbols: missing constellation");
  if (count < 1) throw std::invalid_argument("generate_symbols: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<SymbolIndex> pick(0, static_cast<SymbolIndex>(spec->order - 1));
  SymbolFrame frame;
  frame.tx_indices.resize(count);
  for (auto& idx : frame.tx_indices) idx = pick(rng);
  frame.spec = std::move(spec);
  frame.seed = seed;
  return frame;
}

namespace {

// Continuous RRC pulse at t (in symbol periods), peak 1 - b + 4b/pi.
double rrc_pulse(double t, double b) {
  if (t == 0.0) return 1.0 - b + 4.0 * b / kPi;
  if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-12) {
    return b / std::numbers::sqrt2 *
           ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
            (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
  }
  const double num = std::sin(kPi * t * (1.0 - b)) + 4.0 * b * t * std::cos(kPi * t * (1.0 + b));
  const double den = kPi * t * (1.0 - 16.0 * b * b * t * t);
  return num / den;
}

std::vector<double> raw_taps(int sps, double rolloff, int span) {
  const int half = span * sps / 2;
  std::vector<double> taps(2 * half + 1);
  for (int k = -half; k <= half; ++k)
    taps[k + half] = rrc_pulse(static_cast<double>(k) / sps, rolloff);
  return taps;
}

}  // namespace

std::vector<double> rrc_taps(int samples_per_symbol, double rolloff, int span_symbols) {
  auto taps = raw_taps(samples_per_symbol, rolloff, span_symbols);
  double energy = 0.0;
  for (double t : taps) energy += t * t;
  const double norm = 1.0 / std::sqrt(energy);
  for (double& t : taps) t *= norm;
  return taps;
}

double rrc_captured_energy(int samples_per_symbol, double rolloff, int span_symbols) {
  // The pulse is band-limited below the sampling Nyquist rate, so the sampled
  // energy of the untruncated pulse equals samples_per_symbol exactly.
  const auto taps = raw_taps(samples_per_symbol, rolloff, span_symbols);
  double energy = 0.0;
  for (double t : taps) energy += t * t;
  return energy / samples_per_symbol;
}

namespace {

// Spectrum of the taps placed circularly around sample 0 of an n-sample frame.
ComplexVector circular_filter_spectrum(const std::vector<double>& taps, std::size_t n) {
  ComplexVector h(n, Complex{});
  const auto half = static_cast<long>(taps.size() / 2);
  const auto len = static_cast<long>(n);
  for (long k = -half; k <= half; ++k) {
    const long pos = ((k % len) + len) % len;
    h[static_cast<std::size_t>(pos)] += taps[static_cast<std::size_t>(k + half)];
  }
  fft::forward(h);
  return h;
}

}  // namespace

Waveform rrc_shape(std::span<const Complex> symbol_values, const ShapingConfig& shaping,
                   Diagnostics* diagnostics) {
  shaping.validate();
  if (symbol_values.empty()) throw std::invalid_argument("rrc_shape: no symbols");
  const auto sps = static_cast<std::size_t>(shaping.samples_per_symbol);
  const std::size_t n = symbol_values.size() * sps;

  if (diagnostics) {
    const double captured = rrc_captured_energy(shaping.samples_per_symbol, shaping.rolloff,
                                                shaping.filter_span_symbols);
    if (captured < kMinCapturedEnergy) {
      std::ostringstream msg;
      msg << "rrc_shape: " << shaping.filter_span_symbols << "-symbol span keeps only "
          << captured * 100.0 << "% of the pulse energy";
      diagnostics->warn(msg.str());
    }
  }

  ComplexVector x(n, Complex{});
  for (std::size_t k = 0; k < symbol_values.size(); ++k) x[k * sps] = symbol_values[k];
  fft::forward(x);
  const auto h = circular_filter_spectrum(
      rrc_taps(shaping.samples_per_symbol, shaping.rolloff, shaping.filter_span_symbols), n);
  for (std::size_t k = 0; k < n; ++k) x[k] *= h[k];
  fft::inverse(x);
  return Waveform{std::move(x), shaping.sample_period(), 0.0};
}

Waveform rrc_shape(const SymbolFrame& frame, const ShapingConfig& shaping,
                   Diagnostics* diagnostics) {
  if (!frame.spec) throw std::invalid_argument("rrc_shape: frame has no constellation");
  const auto values = symbol_points(frame.tx_indices, *frame.spec);
  return rrc_shape(values, shaping, diagnostics);
}

double launch_scale(const Waveform& wave, double p0_dbm) {
  const double p = wave.power();
  if (!(p > 0.0) || !std::isfinite(p))
    throw std::invalid_argument("set_launch_power: waveform has zero or non-finite power");
  return std::sqrt(dbm_to_watts(p0_dbm) / p);
}

Waveform set_launch_power(Waveform wave, double p0_dbm) {
  const double factor = launch_scale(wave, p0_dbm);
  return scaled(std::move(wave), factor);
}

Waveform scaled(Waveform wave, double factor) {
  for (auto& s : wave.samples) s *= factor;
  return wave;
}

}  // namespace ppe
