#include "ppe/offset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ppe/operators.hpp"

namespace ppe {

PerturbationVector virtual_hd_perturbation(const Waveform& a_hd0, const FiberLink& link,
                                           const SsfmConfig& ssfm, double launch_power_w,
                                           Diagnostics* diagnostics) {
  if (!(launch_power_w > 0.0))
    throw std::invalid_argument("virtual_hd_perturbation: launch power must be > 0");
  const double root = std::sqrt(launch_power_w);
  const Waveform launched = scaled(a_hd0, root);
  const Waveform received = ssfm_propagate(launched, link, ssfm, diagnostics);
  return delta_u(scaled(received, 1.0 / root), a_hd0, link, Provenance::VirtualHd);
}

OffsetReport power_offset(const LeastSquaresSolver& hd_solver, std::span<const Complex> u_hd,
                          std::span<const Complex> u_tx, const PerturbationVector& virtual_du,
                          const PerturbationVector& du_tx) {
  if (hd_solver.built_from() != Provenance::Hd)
    throw std::invalid_argument("power_offset: solver must be built from HD references");
  if (virtual_du.built_from != Provenance::VirtualHd)
    throw std::invalid_argument("power_offset: virtual perturbation has the wrong provenance");
  if (du_tx.built_from != Provenance::Tx)
    throw std::invalid_argument("power_offset: dU_tx must come from the TX reference");
  const auto n = static_cast<std::size_t>(hd_solver.rows());
  if (u_hd.size() != n || u_tx.size() != n ||
      static_cast<std::size_t>(virtual_du.values.size()) != n ||
      static_cast<std::size_t>(du_tx.values.size()) != n)
    throw std::invalid_argument("power_offset: inconsistent vector lengths");

  Eigen::VectorXcd bracket(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    bracket[k] = u_hd[i] - u_tx[i] + virtual_du.values[k] - du_tx.values[k];
  }

  OffsetReport report;
  report.positions_km = hd_solver.positions_km();
  report.po_raw = hd_solver.solve(bracket);
  report.po_linear.resize(report.positions_km.size());
  for (std::size_t k = 0; k < report.po_linear.size(); ++k)
    report.po_linear[k] = report.po_raw[static_cast<Eigen::Index>(k)].real();
  return report;
}

PowerProfileEstimate ideal_po_removal(const PowerProfileEstimate& profile_hd,
                                      const OffsetReport& report) {
  if (profile_hd.built_from != Provenance::Hd)
    throw std::invalid_argument("ideal_po_removal: profile must come from the HD path");
  if (profile_hd.positions_km != report.positions_km ||
      profile_hd.raw_solution.size() != report.po_raw.size())
    throw std::invalid_argument("ideal_po_removal: position grids differ");
  return make_estimate(profile_hd.positions_km, profile_hd.raw_solution + report.po_raw,
                       Provenance::HdCorrected);
}

DbConversion po_to_db(std::span<const double> po_linear, std::span<const double> gamma_prime) {
  if (po_linear.size() != gamma_prime.size())
    throw std::invalid_argument("po_to_db: length mismatch");
  DbConversion out;
  out.values.resize(po_linear.size());
  out.flagged.resize(po_linear.size());
  for (std::size_t k = 0; k < po_linear.size(); ++k) {
    const double ratio = po_linear[k] / gamma_prime[k];
    if (!(gamma_prime[k] > 0.0) || !(ratio < 1.0)) {
      out.values[k] = std::numeric_limits<double>::quiet_NaN();
      out.flagged[k] = true;
      ++out.excluded;
    } else {
      out.values[k] = -10.0 * std::log10(1.0 - ratio);
    }
  }
  return out;
}

void attach_db(OffsetReport& report, const ReferenceProfile& reference) {
  if (reference.positions_km.size() != report.positions_km.size())
    throw std::invalid_argument("attach_db: position grids differ");
  for (std::size_t k = 0; k < report.positions_km.size(); ++k)
    if (std::abs(reference.positions_km[k] - report.positions_km[k]) > 1e-9)
      throw std::invalid_argument("attach_db: position grids differ");
  auto db = po_to_db(report.po_linear, reference.gamma_prime);
  report.po_db = std::move(db.values);
  report.flagged = std::move(db.flagged);
  report.excluded = db.excluded;
}

double OffsetFit::evaluate(double ser) const {
  return k * ser + p * std::sqrt(1.0 - ser) + q;
}

double OffsetFit::residual_scale() const {
  if (residuals.empty()) return 0.0;
  double sum = 0.0;
  for (double r : residuals) sum += r * r;
  return std::sqrt(sum / static_cast<double>(residuals.size()));
}

OffsetFit fit_offset_vs_ser(std::span<const double> ser, std::span<const double> po) {
  if (ser.size() != po.size()) throw std::invalid_argument("fit_offset_vs_ser: length mismatch");
  const std::set<double> distinct(ser.begin(), ser.end());
  if (distinct.size() < 2)
    throw std::invalid_argument("fit_offset_vs_ser: degenerate SER grid (all points equal)");
  if (distinct.size() < 4)
    throw std::invalid_argument("fit_offset_vs_ser: need at least 4 distinct SER points");
  for (double s : ser)
    if (!(s >= 0.0 && s <= 1.0))
      throw std::invalid_argument("fit_offset_vs_ser: SER outside [0, 1]");

  const auto n = static_cast<Eigen::Index>(ser.size());
  Eigen::MatrixXd basis(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = ser[static_cast<std::size_t>(i)];
    basis(i, 0) = s;
    basis(i, 1) = std::sqrt(1.0 - s);
    basis(i, 2) = 1.0;
    y[i] = po[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d coef = basis.colPivHouseholderQr().solve(y);

  OffsetFit fit;
  fit.k = coef[0];
  fit.p = coef[1];
  fit.q = coef[2];
  fit.ser_grid.assign(ser.begin(), ser.end());
  const Eigen::VectorXd residual = y - basis * coef;
  fit.residuals.assign(residual.data(), residual.data() + n);
  const double mean = y.mean();
  const double total = (y.array() - mean).square().sum();
  fit.r_squared = total > 0.0 ? 1.0 - residual.squaredNorm() / total : 1.0;
  return fit;
}

PositionFilter span_beginnings(const FiberLink& link, double length_km) {
  const double span = link.span_length_km;
  return [span, length_km](double z) {
    const double within = z - span * std::floor(z / span + 1e-9);
    return within < length_km - 1e-9;
  };
}

double rms_error(std::span<const double> positions_km, std::span<const double> estimate,
                 std::span<const double> reference, const PositionFilter& filter) {
  if (positions_km.size() != estimate.size() || estimate.size() != reference.size())
    throw std::invalid_argument("rms_error: length mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < positions_km.size(); ++k) {
    if (filter && !filter(positions_km[k])) continue;
    const double d = estimate[k] - reference[k];
    sum += d * d;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("rms_error: no positions selected");
  return std::sqrt(sum / static_cast<double>(count));
}

double rms_error(const PowerProfileEstimate& profile, const ReferenceProfile& reference,
                 const PositionFilter& filter) {
  if (profile.positions_km.size() != reference.positions_km.size())
    throw std::invalid_argument("rms_error: position grids differ");
  for (std::size_t k = 0; k < profile.positions_km.size(); ++k)
    if (std::abs(profile.positions_km[k] - reference.positions_km[k]) > 1e-9)
      throw std::invalid_argument("rms_error: position grids differ");
  return rms_error(profile.positions_km, profile.gamma_prime_hat, reference.gamma_prime, filter);
}

ComplexVector hd_expansion_column(const Waveform& a_tx0, const Waveform& a_hd0,
                                  const FiberLink& link, double z_km) {
  if (a_tx0.size() != a_hd0.size())
    throw std::invalid_argument("hd_expansion_column: reference lengths differ");
  const double T = a_tx0.sample_period;
  ComplexVector w(a_tx0.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = a_hd0.samples[i] - a_tx0.samples[i];
  const ComplexVector a = disperse(a_tx0.samples, T, link, z_km);
  w = disperse(w, T, link, z_km);

  ComplexVector terms(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Complex ai = a[i];
    const Complex wi = w[i];
    terms[i] = std::norm(wi) * wi + 2.0 * std::norm(ai) * wi + 2.0 * std::norm(wi) * ai +
               ai * ai * std::conj(wi) + wi * wi * std::conj(ai);
  }
  ComplexVector out = disperse(terms, T, link, link.total_length_km() - z_km);
  const Complex scale{0.0, link.dz_km};
  for (auto& s : out) s *= scale;
  return out;
}

}  // namespace ppe
