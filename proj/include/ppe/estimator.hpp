#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "ppe/common.hpp"
#include "ppe/fiber.hpp"
#include "ppe/operators.hpp"
#include "ppe/waveform.hpp"

namespace ppe {

/// Which reference data a matrix, vector or estimate was derived from.
enum class Provenance { Tx, Hd, VirtualHd, HdCorrected, Synthetic };

std::string_view to_string(Provenance p);

/// G: one column per position z in {0, dz, ..., L - dz}, each the normalized
/// first-order perturbation j dz D_{zL}[N[D_{0z}[a_ref]]] sampled on the
/// reference time grid.
struct PerturbationMatrix {
  Eigen::MatrixXcd columns;
  std::vector<double> positions_km;
  double dz_km = 0.0;
  Provenance built_from = Provenance::Tx;

  Eigen::Index rows() const { return columns.rows(); }
  Eigen::Index cols() const { return columns.cols(); }
};

struct PerturbationVector {
  Eigen::VectorXcd values;
  Provenance built_from = Provenance::Tx;
};

struct PowerProfileEstimate {
  std::vector<double> positions_km;
  std::vector<double> gamma_prime_hat;  ///< real part of the solution, 1/km
  Eigen::VectorXcd raw_solution;
  Provenance built_from = Provenance::Tx;

  /// RMS of the imaginary part of the solution (diagnostic only).
  double imaginary_rms() const;
};

/// Evaluates perturbation columns for one reference waveform, reusing its
/// spectrum across positions.
class PerturbationBuilder {
 public:
  PerturbationBuilder(const Waveform& a_ref, const FiberLink& link);

  /// Column for grid position z (km); off-grid positions are rejected.
  ComplexVector column(double z_km) const;
  /// Writes the column into `out` (length = reference length).
  void column_into(double z_km, std::span<Complex> out) const;

 private:
  FiberLink link_;
  ComplexVector spectrum_;
  DispersionKernel kernel_;
};

/// One column of G.
ComplexVector perturbation_column(const Waveform& a_ref, const FiberLink& link, double z_km);

struct BuildOptions {
  std::size_t memory_budget_bytes = std::size_t{4} << 30;
  unsigned threads = 1;
};

/// Bytes needed to hold G for a reference of `samples` samples.
std::size_t matrix_bytes(std::size_t samples, const FiberLink& link);

/// Assembles all L/dz columns. Throws MemoryBudgetError when G would exceed the budget.
PerturbationMatrix build_matrix(const Waveform& a_ref, const FiberLink& link,
                                Provenance built_from, const BuildOptions& options = {});

/// U = D_{0L}[a_ref], the dispersion-only field at the receiver.
ComplexVector linear_reference(const Waveform& a_ref, const FiberLink& link);

/// dU = a_l - D_{0L}[a_ref].
PerturbationVector delta_u(const Waveform& a_l, const Waveform& a_ref, const FiberLink& link,
                           Provenance built_from);

/// Default guard on cond(G).
inline constexpr double kMaxCondition = 1e12;

/// Householder-QR least squares on a fixed G; solves several right-hand sides.
class LeastSquaresSolver {
 public:
  explicit LeastSquaresSolver(const PerturbationMatrix& g, double max_condition = kMaxCondition);

  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;
  /// 2-norm condition number of G (from the singular values of R).
  double condition() const { return condition_; }
  const std::vector<double>& positions_km() const { return positions_km_; }
  Provenance built_from() const { return built_from_; }
  Eigen::Index rows() const { return qr_.rows(); }

 private:
  std::vector<double> positions_km_;
  Provenance built_from_;
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr_;
  double condition_ = 0.0;
};

/// Least-squares profile estimate min ||G x - dU||, reported as Re(x).
PowerProfileEstimate mmse_solve(const PerturbationMatrix& g, const PerturbationVector& du);
PowerProfileEstimate mmse_solve(const LeastSquaresSolver& solver, const PerturbationVector& du);

/// Wraps a raw solution vector as a profile estimate on G's grid.
PowerProfileEstimate make_estimate(std::vector<double> positions_km, Eigen::VectorXcd solution,
                                   Provenance built_from);

/// Writes G and dU as little-endian interleaved complex64 (float re, float im)
/// to <stem>.G.bin (column-major) and <stem>.dU.bin, with a JSON sidecar
/// <stem>.json describing dimensions and layout.
void dump_system(const std::filesystem::path& stem, const PerturbationMatrix& g,
                 const PerturbationVector& du);

}  // namespace ppe
