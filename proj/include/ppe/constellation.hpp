#pragma once

#include <span>
#include <vector>

#include "ppe/common.hpp"

namespace ppe {

/// Square, Gray-mapped M-QAM alphabet normalized to unit average symbol energy.
///
/// Symbol index layout: the upper log2(sqrt(M)) bits select the in-phase
/// level, the lower bits the quadrature level; each rail is Gray coded so
/// that neighbouring levels differ in one bit.
struct ConstellationSpec {
  int order = 0;               ///< M
  int side = 0;                ///< sqrt(M), levels per rail
  double level_spacing = 0.0;  ///< distance between adjacent levels
  double average_energy = 0.0;
  std::vector<Complex> points;    ///< points[index]
  std::vector<int> level_i;       ///< in-phase level (0..side-1) of each index
  std::vector<int> level_q;       ///< quadrature level of each index
  std::vector<SymbolIndex> index_of_levels;  ///< [li * side + lq] -> index

  Complex point(SymbolIndex index) const { return points.at(index); }
  /// Amplitude of rail level l.
  double level_amplitude(int l) const { return (2.0 * l - (side - 1)) * 0.5 * level_spacing; }
};

/// Builds the unit-energy square QAM of order M (M = 4, 16, 64, 256, ...).
ConstellationSpec build_qam(int order);

/// Nearest-point decision. Exact ties resolve to the lowest symbol index.
SymbolIndex hard_decide(Complex sample, const ConstellationSpec& spec);
std::vector<SymbolIndex> hard_decide(std::span<const Complex> samples,
                                     const ConstellationSpec& spec);

/// Maps indices to constellation points.
ComplexVector symbol_points(std::span<const SymbolIndex> indices, const ConstellationSpec& spec);

// -- Theoretical error rates (AWGN, complex noise of variance N0 per symbol) --

/// Gaussian tail probability Q(x).
double q_function(double x);

/// SER of M-ASK with average energy Es at the given Es/N0 (linear).
double ser_mask(int order, double es_over_n0);

/// SER of square M-QAM: 1 - (1 - SER_sqrt(M)-ASK(Es/2))^2.
double ser_mqam(int order, double es_over_n0);

/// Conditional error probability of an edge level of one sqrt(M)-ASK rail
/// given the overall M-QAM SER (inverse pairing with ser_mqam).
double edge_ser_from_overall(int order, double ser_qam);

/// Es/N0 (linear) at which ser_mqam equals the target.
double es_over_n0_for_ser(int order, double ser_qam);

// -- Error vector W = A_hd - A_tx --

/// Geometry class of an error outcome: level steps on the two rails,
/// ordered (minor <= major). {0,0} is the error-free outcome; for 4-QAM
/// {0,1} is the single-rail class S1 and {1,1} the diagonal class S2.
struct ErrorClass {
  int minor = 0;
  int major = 0;
  auto operator<=>(const ErrorClass&) const = default;
};

inline constexpr ErrorClass kNoError{0, 0};
inline constexpr ErrorClass kSingleRail{0, 1};
inline constexpr ErrorClass kDiagonal{1, 1};

/// Every difference between a decided point and a true point.
struct ErrorOutcomeSet {
  std::vector<Complex> outcomes;
  std::vector<int> step_i;  ///< signed in-phase level step of each outcome
  std::vector<int> step_q;
  std::vector<ErrorClass> class_of;

  std::size_t size() const { return outcomes.size(); }
  /// Position of the outcome with the given level steps.
  std::size_t find(int di, int dq) const;
};

ErrorOutcomeSet error_outcomes(const ConstellationSpec& spec);

/// Error-vector PMF under the independent-rail Gaussian model: each rail is a
/// sqrt(M)-ASK where a level moves to each existing neighbour with the edge
/// error probability; jumps of more than one level are not modeled.
struct ErrorPmf {
  ErrorOutcomeSet support;
  std::vector<double> probability;  ///< marginal P_W(w) for uniform symbols
  double ser = 0.0;
  double edge_ser = 0.0;
  int side = 0;

  /// P(W = w | A = a) for a transmitted index and an outcome position.
  double conditional(const ConstellationSpec& spec, SymbolIndex a, std::size_t outcome) const;
  /// Marginal probability of a geometry class.
  double class_probability(ErrorClass cls) const;
  double total() const;
};

ErrorPmf error_pmf(const ConstellationSpec& spec, double ser_qam);

}  // namespace ppe
