#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ppe/channel.hpp"
#include "ppe/estimator.hpp"

namespace ppe {

/// Power offset of an HD-referenced estimate. Sign convention:
/// est_hd = gamma' - po_linear, so a positive offset means the HD path
/// underestimates the power.
struct OffsetReport {
  std::vector<double> positions_km;
  std::vector<double> po_linear;  ///< 1/km, same units as gamma'
  Eigen::VectorXcd po_raw;        ///< complex solution before taking the real part
  std::vector<double> po_db;      ///< NaN where flagged
  std::vector<bool> flagged;      ///< po_linear >= gamma' at this position
  std::size_t excluded = 0;
  double ser = 0.0;
  double launch_power_dbm = 0.0;
  int modulation = 0;
};

/// Re-transmits the normalized HD reference (scaled back to the launch power
/// `launch_power_w`) through the noiseless link and returns
/// A_hd,L - D_{0L}[a_hd0], normalized like the other estimator inputs.
PerturbationVector virtual_hd_perturbation(const Waveform& a_hd0, const FiberLink& link,
                                           const SsfmConfig& ssfm, double launch_power_w,
                                           Diagnostics* diagnostics = nullptr);

/// PO = pinv(G_hd) [U_hd - U_tx + dU_hd,virtual - dU_tx].
OffsetReport power_offset(const LeastSquaresSolver& hd_solver, std::span<const Complex> u_hd,
                          std::span<const Complex> u_tx, const PerturbationVector& virtual_du,
                          const PerturbationVector& du_tx);

/// est_hd + po_linear, tagged as HD-corrected.
PowerProfileEstimate ideal_po_removal(const PowerProfileEstimate& profile_hd,
                                      const OffsetReport& report);

struct DbConversion {
  std::vector<double> values;  ///< NaN at flagged positions
  std::vector<bool> flagged;
  std::size_t excluded = 0;
};

/// 10 log10(1 / (1 - po / gamma')) per position.
DbConversion po_to_db(std::span<const double> po_linear, std::span<const double> gamma_prime);

/// Fills po_db, flagged and excluded of a report from the true profile.
void attach_db(OffsetReport& report, const ReferenceProfile& reference);

/// po(SER) = k SER + p sqrt(1 - SER) + q.
struct OffsetFit {
  double k = 0.0;
  double p = 0.0;
  double q = 0.0;
  std::vector<double> ser_grid;
  std::vector<double> residuals;
  double r_squared = 0.0;

  double evaluate(double ser) const;
  /// RMS of the residuals.
  double residual_scale() const;
};

/// Least-squares fit on {SER, sqrt(1 - SER), 1}. Needs at least four distinct SER values.
OffsetFit fit_offset_vs_ser(std::span<const double> ser, std::span<const double> po);

using PositionFilter = std::function<bool(double z_km)>;

/// Keeps positions within the first `length_km` of each span.
PositionFilter span_beginnings(const FiberLink& link, double length_km = 40.0);

/// RMS of (estimate - reference) over the selected positions.
double rms_error(const PowerProfileEstimate& profile, const ReferenceProfile& reference,
                 const PositionFilter& filter);
double rms_error(std::span<const double> positions_km, std::span<const double> estimate,
                 std::span<const double> reference, const PositionFilter& filter);

/// Difference between the HD and TX perturbation columns at z, written as
/// the explicit expansion j dz D_{zL}[N(w) + 2|a|^2 w + 2|w|^2 a + a^2 w* + w^2 a*]
/// with a = D_{0z} a_tx0 and w = D_{0z}(a_hd0 - a_tx0).
ComplexVector hd_expansion_column(const Waveform& a_tx0, const Waveform& a_hd0,
                                  const FiberLink& link, double z_km);

}  // namespace ppe
