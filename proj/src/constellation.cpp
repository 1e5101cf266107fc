#include "ppe/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ppe {
namespace {

int exact_sqrt(int order) {
  if (order < 1) return -1;
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  return root * root == order ? root : -1;
}

unsigned gray_decode(unsigned g) {
  unsigned value = g;
  for (unsigned shift = g >> 1; shift != 0; shift >>= 1) value ^= shift;
  return value;
}

int rail_side_or_throw(int order, const char* what) {
  const int side = exact_sqrt(order);
  if (side < 2)
    throw std::invalid_argument(std::string(what) + ": M=" + std::to_string(order) +
                                " is not a square QAM order");
  return side;
}

}  // namespace

ConstellationSpec build_qam(int order) {
  const int side = exact_sqrt(order);
  if (side < 2 || (side & (side - 1)) != 0)
    throw std::invalid_argument("build_qam: M=" + std::to_string(order) +
                                " unsupported; need a square QAM with a power-of-two side "
                                "(4, 16, 64, 256, ...)");
  int bits = 0;
  while ((1 << bits) < side) ++bits;

  ConstellationSpec spec;
  spec.order = order;
  spec.side = side;
  // Mean energy of the odd-integer grid {+-1, +-3, ...}^2 is 2(M-1)/3.
  spec.level_spacing = 2.0 / std::sqrt(2.0 * (order - 1) / 3.0);
  spec.points.resize(order);
  spec.level_i.resize(order);
  spec.level_q.resize(order);
  spec.index_of_levels.resize(order);
  for (int idx = 0; idx < order; ++idx) {
    const auto gi = static_cast<unsigned>(idx) >> bits;
    const auto gq = static_cast<unsigned>(idx) & static_cast<unsigned>(side - 1);
    const int li = static_cast<int>(gray_decode(gi));
    const int lq = static_cast<int>(gray_decode(gq));
    spec.level_i[idx] = li;
    spec.level_q[idx] = lq;
    spec.index_of_levels[li * side + lq] = static_cast<SymbolIndex>(idx);
    spec.points[idx] = {spec.level_amplitude(li), spec.level_amplitude(lq)};
  }
  double energy = 0.0;
  for (const auto& p : spec.points) energy += std::norm(p);
  spec.average_energy = energy / order;
  return spec;
}

namespace {

SymbolIndex brute_force_decide(Complex sample, const ConstellationSpec& spec) {
  SymbolIndex best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < spec.points.size(); ++idx) {
    const double d = std::norm(sample - spec.points[idx]);
    if (d < best_distance) {
      best_distance = d;
      best = static_cast<SymbolIndex>(idx);
    }
  }
  return best;
}

// Nearest level on one rail; false when the sample sits exactly on a boundary.
bool nearest_level(double x, const ConstellationSpec& spec, int& level) {
  const double u = (x / (0.5 * spec.level_spacing) + (spec.side - 1)) * 0.5;
  const double fl = std::floor(u);
  if (u - fl == 0.5) return false;
  level = std::clamp(static_cast<int>(std::lround(u)), 0, spec.side - 1);
  return true;
}

}  // namespace

SymbolIndex hard_decide(Complex sample, const ConstellationSpec& spec) {
  int li = 0;
  int lq = 0;
  if (!nearest_level(sample.real(), spec, li) || !nearest_level(sample.imag(), spec, lq))
    return brute_force_decide(sample, spec);
  return spec.index_of_levels[li * spec.side + lq];
}

std::vector<SymbolIndex> hard_decide(std::span<const Complex> samples,
                                     const ConstellationSpec& spec) {
  std::vector<SymbolIndex> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [&](Complex s) { return hard_decide(s, spec); });
  return out;
}

ComplexVector symbol_points(std::span<const SymbolIndex> indices, const ConstellationSpec& spec) {
  ComplexVector out(indices.size());
  std::transform(indices.begin(), indices.end(), out.begin(),
                 [&](SymbolIndex i) { return spec.points.at(i); });
  return out;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double ser_mask(int order, double es_over_n0) {
  if (order < 2) throw std::invalid_argument("ser_mask: M must be >= 2");
  if (!(es_over_n0 >= 0.0)) throw std::invalid_argument("ser_mask: Es/N0 must be >= 0");
  const double m = order;
  return 2.0 * ((m - 1.0) / m) * q_function(std::sqrt(6.0 * es_over_n0 / (m * m - 1.0)));
}

double ser_mqam(int order, double es_over_n0) {
  const int side = rail_side_or_throw(order, "ser_mqam");
  const double rail = ser_mask(side, es_over_n0 / 2.0);
  return rail * (2.0 - rail);
}

double edge_ser_from_overall(int order, double ser_qam) {
  const int side = rail_side_or_throw(order, "edge_ser_from_overall");
  if (!(ser_qam >= 0.0 && ser_qam <= 1.0))
    throw std::invalid_argument("edge_ser_from_overall: SER outside [0, 1]");
  const double s = side;
  return (s / (2.0 * (s - 1.0))) * (1.0 - std::sqrt(1.0 - ser_qam));
}

double es_over_n0_for_ser(int order, double ser_qam) {
  const int side = rail_side_or_throw(order, "es_over_n0_for_ser");
  const double edge = edge_ser_from_overall(order, ser_qam);
  if (!(edge > 0.0 && edge < 0.5))
    throw std::invalid_argument("es_over_n0_for_ser: SER not reachable by a finite Es/N0");
  // Q is strictly decreasing; bisect for Q(x) = edge on x >= 0.
  double lo = 0.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (q_function(mid) > edge ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double s = side;
  // x^2 = 6 (Es/2) / (N0 (s^2 - 1))
  return x * x * (s * s - 1.0) / 3.0;
}

std::size_t ErrorOutcomeSet::find(int di, int dq) const {
  for (std::size_t k = 0; k < outcomes.size(); ++k)
    if (step_i[k] == di && step_q[k] == dq) return k;
  throw std::out_of_range("ErrorOutcomeSet::find: no such outcome");
}

ErrorOutcomeSet error_outcomes(const ConstellationSpec& spec) {
  ErrorOutcomeSet set;
  const int reach = spec.side - 1;
  for (int di = -reach; di <= reach; ++di) {
    for (int dq = -reach; dq <= reach; ++dq) {
      set.outcomes.emplace_back(di * spec.level_spacing, dq * spec.level_spacing);
      set.step_i.push_back(di);
      set.step_q.push_back(dq);
      const int a = std::abs(di);
      const int b = std::abs(dq);
      set.class_of.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  return set;
}

namespace {

// P(level step | level) on one rail.
double rail_conditional(int level, int step, int side, double edge) {
  const bool has_up = level + 1 < side;
  const bool has_down = level > 0;
  switch (step) {
    case 0: return 1.0 - edge * ((has_up ? 1 : 0) + (has_down ? 1 : 0));
    case 1: return has_up ? edge : 0.0;
    case -1: return has_down ? edge : 0.0;
    default: return 0.0;
  }
}

// Marginal over a uniformly distributed level.
double rail_marginal(int step, int side, double edge) {
  double sum = 0.0;
  for (int l = 0; l < side; ++l) sum += rail_conditional(l, step, side, edge);
  return sum / side;
}

}  // namespace

ErrorPmf error_pmf(const ConstellationSpec& spec, double ser_qam) {
  if (!(ser_qam >= 0.0 && ser_qam < 1.0))
    throw std::invalid_argument("error_pmf: SER outside [0, 1)");
  ErrorPmf pmf;
  pmf.support = error_outcomes(spec);
  pmf.ser = ser_qam;
  pmf.side = spec.side;
  pmf.edge_ser = edge_ser_from_overall(spec.order, ser_qam);
  if (spec.side > 2 && pmf.edge_ser > 0.5)
    throw std::domain_error("error_pmf: SER too large for the adjacent-error model");
  pmf.probability.resize(pmf.support.size());
  for (std::size_t k = 0; k < pmf.support.size(); ++k)
    pmf.probability[k] = rail_marginal(pmf.support.step_i[k], spec.side, pmf.edge_ser) *
                         rail_marginal(pmf.support.step_q[k], spec.side, pmf.edge_ser);
  return pmf;
}

double ErrorPmf::conditional(const ConstellationSpec& spec, SymbolIndex a,
                             std::size_t outcome) const {
  return rail_conditional(spec.level_i.at(a), support.step_i.at(outcome), side, edge_ser) *
         rail_conditional(spec.level_q.at(a), support.step_q.at(outcome), side, edge_ser);
}

double ErrorPmf::class_probability(ErrorClass cls) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < probability.size(); ++k)
    if (support.class_of[k] == cls) sum += probability[k];
  return sum;
}

double ErrorPmf::total() const {
  double sum = 0.0;
  for (double p : probability) sum += p;
  return sum;
}

}  // namespace ppe
