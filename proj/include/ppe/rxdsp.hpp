#pragma once

#include <span>
#include <vector>

#include "ppe/constellation.hpp"
#include "ppe/fiber.hpp"
#include "ppe/waveform.hpp"

namespace ppe {

/// Inverse of the link's accumulated dispersion, applied in the frequency domain.
Waveform cdc(const Waveform& wave, const FiberLink& link);

/// RRC matched filter followed by decimation to one sample per symbol.
/// `delay_samples` is the known circular delay of the frame (no timing recovery).
ComplexVector matched_filter_downsample(const Waveform& wave, const ShapingConfig& shaping,
                                        long delay_samples = 0);

struct CprResult {
  ComplexVector symbols;  ///< de-rotated input
  double phase = 0.0;     ///< removed rotation (rad), in [-pi/4, pi/4)
};

/// Frame-constant blind phase search: tests `test_phases` rotations in
/// [-pi/4, pi/4) and keeps the one with the least total squared decision
/// distance. The pi/2 ambiguity of square QAM is left to the caller.
CprResult cpr(std::span<const Complex> symbols, const ConstellationSpec& spec,
              int test_phases = 64);

/// Multiple of pi/2 that best aligns `symbols` with the known transmitted
/// points (maximum real part of their cross-correlation).
int resolve_quadrant(std::span<const Complex> symbols, std::span<const Complex> reference);

/// Rotates every sample by exp(j phase).
ComplexVector rotate(std::span<const Complex> symbols, double phase);

/// Reference fields regenerated from transmitted and decided symbols through
/// the transmitter's shaping chain and one common launch scale factor.
struct References {
  Waveform a_tx0;
  Waveform a_hd0;
};

References regenerate_references(const SymbolFrame& frame, std::span<const SymbolIndex> decided,
                                 const ShapingConfig& shaping, double p0_dbm);

/// Fraction of mismatched indices.
double measure_ser(std::span<const SymbolIndex> decided, std::span<const SymbolIndex> truth);

struct ReceiverConfig {
  int cpr_test_phases = 64;
};

/// Estimator inputs for one received frame. All three fields are divided by
/// sqrt(P(0)), so the nonlinear coefficient solved for is gamma * P(z) in 1/km.
struct RxBundle {
  Waveform a_l;    ///< received field before dispersion compensation
  Waveform a_tx0;  ///< reference from the transmitted symbols
  Waveform a_hd0;  ///< reference from the hard decisions
  std::vector<SymbolIndex> decided;
  double measured_ser = 0.0;
  double cpr_phase = 0.0;  ///< total removed rotation, ambiguity included
  double launch_power_w = 0.0;
};

/// Runs CDC, matched filtering, CPR and hard decision on a received physical
/// field, returning only the decisions and SER (cheap path for calibration).
struct Decisions {
  std::vector<SymbolIndex> decided;
  double measured_ser = 0.0;
  double cpr_phase = 0.0;
};

Decisions decide_frame(const Waveform& received, const SymbolFrame& frame, const FiberLink& link,
                       const ShapingConfig& shaping, double p0_dbm, const ReceiverConfig& rx);

/// Full receiver: decisions plus the normalized PPE input fields.
RxBundle receive(const Waveform& received, const SymbolFrame& frame, const FiberLink& link,
                 const ShapingConfig& shaping, double p0_dbm, const ReceiverConfig& rx);

}  // namespace ppe
