#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ppe/constellation.hpp"
#include "ppe/fiber.hpp"
#include "ppe/waveform.hpp"

namespace ppe {

/// Additive white Gaussian noise. `n0` is the single-sided PSD in W/Hz; a
/// waveform sampled every T seconds receives circular complex noise of
/// total variance n0 / T per sample, so after an energy-normalized matched
/// filter the per-symbol noise variance is n0 * symbol_rate and Es/N0 has
/// its textbook meaning.
struct NoiseSpec {
  double n0 = 0.0;
  std::uint64_t seed = 0;
};

/// Ground-truth gamma'(z) = gamma * P(z) on the link's estimation grid (1/km).
struct ReferenceProfile {
  std::vector<double> positions_km;
  std::vector<double> gamma_prime;
};

struct SsfmConfig {
  double step_km = 0.1;
  /// Peak nonlinear phase per step above which a warning is raised.
  double max_phase_per_step = 0.05;
};

/// Symmetric split-step integration of the scalar NLSE with loss, GVD and
/// Kerr nonlinearity. Each span ends with a noiseless amplifier of gain
/// exp(alpha * span_length). Input is the physical field at launch.
Waveform ssfm_propagate(const Waveform& wave, const FiberLink& link, const SsfmConfig& config,
                        Diagnostics* diagnostics = nullptr);

/// Per-sample complex noise variance for a given PSD.
inline double noise_variance(double n0, double sample_period) { return n0 / sample_period; }

/// Adds i.i.d. circular Gaussian noise, reproducible from the seed. The same
/// seed always draws the same unit-variance sequence, only scaled by n0.
Waveform add_awgn(const Waveform& wave, const NoiseSpec& noise);

struct CalibrationOptions {
  double symbol_energy = 0.0;  ///< Es at the decision point (J), for the initial guess
  double relative_tolerance = 0.05;
  int max_evaluations = 80;
};

struct Calibration {
  double n0 = 0.0;
  double measured_ser = 0.0;
  int evaluations = 0;
};

/// Finds n0 whose measured SER is within the relative tolerance of the
/// target. `measure_ser` runs the receiver at a given n0. Starts from the
/// AWGN theory inverse and brackets/bisects on log(n0). Throws
/// InfeasibleTargetError when the noiseless SER already exceeds the target.
Calibration n0_for_target_ser(const ConstellationSpec& spec, double target_ser,
                              const std::function<double(double)>& measure_ser,
                              const CalibrationOptions& options);

/// Sawtooth-exponential gamma * P(0) * exp(-alpha (z mod span)) on {0, dz, ..., L - dz}.
ReferenceProfile reference_profile(const FiberLink& link, double p0_dbm);

/// Same law at an arbitrary position (km).
double reference_gamma_prime(const FiberLink& link, double p0_dbm, double z_km);

}  // namespace ppe
