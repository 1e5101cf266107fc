#include "ppe/verify.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "ppe/channel.hpp"
#include "ppe/estimator.hpp"
#include "ppe/offset.hpp"
#include "ppe/operators.hpp"
#include "ppe/rxdsp.hpp"

namespace ppe {

namespace {

double relative_difference(std::span<const Complex> a, std::span<const Complex> b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

double energy(std::span<const Complex> x) {
  double e = 0.0;
  for (auto s : x) e += std::norm(s);
  return e;
}

CheckResult upper_bound(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

struct SmallSystem {
  FiberLink link;
  ShapingConfig shaping;
  SymbolFrame frame;
  Waveform launched;
};

SmallSystem small_system(double p0_dbm) {
  SmallSystem s;
  s.link.dz_km = 8.0;
  auto spec = std::make_shared<const ConstellationSpec>(build_qam(16));
  s.frame = generate_symbols(spec, 1024, 7);
  s.launched = set_launch_power(rrc_shape(s.frame, s.shaping), p0_dbm);
  return s;
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(unsigned threads) {
  std::vector<CheckResult> out;
  const auto sys = small_system(8.0);
  const auto& link = sys.link;
  const double T = sys.launched.sample_period;

  {
    const auto moved = disperse(sys.launched.samples, T, link, link.total_length_km());
    const double e0 = energy(sys.launched.samples);
    out.push_back(upper_bound("dispersion operator preserves energy",
                              std::abs(energy(moved) - e0) / e0, 1e-12));
    const auto two_steps = disperse(disperse(sys.launched.samples, T, link, 37.0), T, link, 203.0);
    out.push_back(upper_bound("dispersion operators compose", relative_difference(two_steps, moved),
                              1e-12));
  }

  {
    FiberLink linear = link;
    linear.gamma_per_w_km = 0.0;
    const auto rx = ssfm_propagate(sys.launched, linear, {});
    const auto expected = disperse(sys.launched.samples, T, linear, linear.total_length_km());
    out.push_back(upper_bound("split-step without nonlinearity matches dispersion only",
                              relative_difference(rx.samples, expected), 1e-6));
  }

  {
    const auto coarse = ssfm_propagate(sys.launched, link, {0.1});
    const auto fine = ssfm_propagate(sys.launched, link, {0.05});
    out.push_back(upper_bound("split-step step halving", relative_difference(coarse.samples, fine.samples),
                              1e-4));
  }

  const double p0 = dbm_to_watts(8.0);
  const double norm = 1.0 / std::sqrt(p0);
  const Waveform a_tx0 = scaled(sys.launched, norm);
  const auto g = build_matrix(a_tx0, link, Provenance::Tx, {std::size_t{1} << 30, threads});
  const LeastSquaresSolver solver(g);

  {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXcd x(g.cols());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = u(rng);
    const PerturbationVector du{g.columns * x, Provenance::Synthetic};
    const auto est = mmse_solve(solver, du);
    const double err = (est.raw_solution - x).norm() / x.norm();
    out.push_back(upper_bound("consistent synthetic system is recovered", err, 1e-8));
  }

  {
    const auto rx = ssfm_propagate(sys.launched, link, {});
    const double n0 = p0 / sys.shaping.symbol_rate / es_over_n0_for_ser(16, 0.05);
    const auto bundle = receive(add_awgn(rx, {n0, 11}), sys.frame, link, sys.shaping, 8.0, {});
    const auto g_hd = build_matrix(bundle.a_hd0, link, Provenance::Hd, {std::size_t{1} << 30, threads});
    const LeastSquaresSolver hd(g_hd);
    const auto du_tx = delta_u(bundle.a_l, bundle.a_tx0, link, Provenance::Tx);
    const auto du_hd = delta_u(bundle.a_l, bundle.a_hd0, link, Provenance::Hd);
    const auto virt = virtual_hd_perturbation(bundle.a_hd0, link, {}, p0);
    const auto report = power_offset(hd, linear_reference(bundle.a_hd0, link),
                                     linear_reference(bundle.a_tx0, link), virt, du_tx);
    const auto est_hd = mmse_solve(hd, du_hd);
    const auto est_v = mmse_solve(hd, virt);
    const double err = (est_hd.raw_solution + report.po_raw - est_v.raw_solution).cwiseAbs().maxCoeff() /
                       est_v.raw_solution.cwiseAbs().maxCoeff();
    char detail[64];
    std::snprintf(detail, sizeof detail, "SER %.4f", bundle.measured_ser);
    out.push_back(upper_bound("HD estimate plus offset equals the virtual estimate", err, 1e-8, detail));
  }

  {
    const auto spec = build_qam(16);
    const double esn0 = es_over_n0_for_ser(16, 0.02);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<SymbolIndex> pick(0, 15);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 / esn0));
    const int n = 200000;
    int errors = 0;
    for (int i = 0; i < n; ++i) {
      const SymbolIndex s = pick(rng);
      const Complex y = spec.points[s] + Complex{normal(rng), normal(rng)};
      errors += hard_decide(y, spec) != s;
    }
    const double p = ser_mqam(16, esn0);
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    out.push_back(upper_bound("Monte Carlo SER within 3 sigma of theory (16-QAM)",
                              std::abs(errors / double(n) - p) / sigma, 3.0));
  }

  {
    const double k = -0.3, p = 0.002, q = -0.002;
    std::vector<double> ser{0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1};
    std::vector<double> po;
    for (double s : ser) po.push_back(k * s + p * std::sqrt(1.0 - s) + q);
    const auto fit = fit_offset_vs_ser(ser, po);
    const double err = std::max({std::abs(fit.k - k), std::abs(fit.p - p), std::abs(fit.q - q)});
    out.push_back(upper_bound("offset law fit recovers exact coefficients", err, 1e-10));
  }

  return out;
}

}  // namespace ppe
