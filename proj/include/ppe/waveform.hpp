#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ppe/common.hpp"
#include "ppe/constellation.hpp"

namespace ppe {

/// Uniformly sampled complex baseband field. Samples are in sqrt(W) for
/// physical fields, or dimensionless once normalized by the launch power.
/// The frame is treated as one period of a periodic signal throughout.
struct Waveform {
  ComplexVector samples;
  double sample_period = 0.0;  ///< seconds
  double position_km = 0.0;    ///< where along the link this field was taken

  std::size_t size() const { return samples.size(); }
  /// Mean |sample|^2.
  double power() const;
  double power_dbm() const { return watts_to_dbm(power()); }
  /// Throws if the container invariants do not hold.
  void validate() const;
};

/// Transmitted symbol indices plus, after the receiver, the decided ones.
struct SymbolFrame {
  std::vector<SymbolIndex> tx_indices;
  std::optional<std::vector<SymbolIndex>> hd_indices;
  std::shared_ptr<const ConstellationSpec> spec;
  std::uint64_t seed = 0;

  std::size_t size() const { return tx_indices.size(); }
};

struct ShapingConfig {
  double symbol_rate = 130e9;  ///< baud
  int samples_per_symbol = 2;
  double rolloff = 0.1;
  int filter_span_symbols = 64;

  double sample_period() const { return 1.0 / (symbol_rate * samples_per_symbol); }
  void validate() const;
};

/// i.i.d. uniform symbols, reproducible from the seed.
SymbolFrame generate_symbols(std::shared_ptr<const ConstellationSpec> spec, std::size_t count,
                             std::uint64_t seed);

/// Root-raised-cosine taps spanning span_symbols symbols (span*sps + 1 taps,
/// centred), normalized to unit energy.
std::vector<double> rrc_taps(int samples_per_symbol, double rolloff, int span_symbols);

/// Fraction of the untruncated pulse energy captured by the truncated taps.
double rrc_captured_energy(int samples_per_symbol, double rolloff, int span_symbols);

/// Minimum fraction of pulse energy the truncated filter should keep.
inline constexpr double kMinCapturedEnergy = 0.999;

/// Upsamples the symbol values and applies the RRC filter by circular
/// convolution. Average energy per symbol equals the constellation energy.
Waveform rrc_shape(std::span<const Complex> symbol_values, const ShapingConfig& shaping,
                   Diagnostics* diagnostics = nullptr);
Waveform rrc_shape(const SymbolFrame& frame, const ShapingConfig& shaping,
                   Diagnostics* diagnostics = nullptr);

/// Amplitude factor that brings the waveform's mean power to p0_dbm.
double launch_scale(const Waveform& wave, double p0_dbm);

/// Scales so that mean |sample|^2 = 10^((p0_dbm - 30)/10) W.
Waveform set_launch_power(Waveform wave, double p0_dbm);

/// Multiplies every sample by a constant.
Waveform scaled(Waveform wave, double factor);

}  // namespace ppe
