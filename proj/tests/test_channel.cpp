#include <cmath>
#include <random>

#include "doctest.h"
#include "ppe/channel.hpp"
#include "ppe/operators.hpp"
#include "ppe/rxdsp.hpp"
#include "support.hpp"

using namespace ppe;

namespace {

Waveform launched(int m, std::size_t symbols, double p0_dbm, std::uint64_t seed = 3) {
  auto spec = std::make_shared<const ConstellationSpec>(build_qam(m));
  return set_launch_power(rrc_shape(generate_symbols(spec, symbols, seed), ShapingConfig{}), p0_dbm);
}

FiberLink single_span() {
  FiberLink link;
  link.span_count = 1;
  link.dz_km = 8.0;
  return link;
}

}  // namespace

TEST_CASE("split-step propagation") {
  SUBCASE("without nonlinearity it equals the dispersion operator") {
    FiberLink link;
    link.gamma_per_w_km = 0.0;
    const auto in = launched(16, 2048, 8.0);
    const auto out = ssfm_propagate(in, link, {});
    const auto expected = disperse(in.samples, in.sample_period, link, link.total_length_km());
    CHECK(testing::relative_l2(out.samples, expected) < 1e-6);
    CHECK(out.position_km == link.total_length_km());
  }

  SUBCASE("without dispersion and loss it is pure self-phase modulation") {
    FiberLink link = single_span();
    link.dispersion_ps_nm_km = 0.0;
    link.alpha_db_per_km = 0.0;
    const auto in = launched(16, 512, 8.0);
    const auto out = ssfm_propagate(in, link, {});
    ComplexVector expected(in.size());
    for (std::size_t i = 0; i < in.size(); ++i)
      expected[i] = in.samples[i] *
                    std::polar(1.0, link.gamma_per_w_km * std::norm(in.samples[i]) * link.span_length_km);
    CHECK(testing::relative_l2(out.samples, expected) < 1e-12);
  }

  SUBCASE("lossy dispersionless span accumulates phase over the effective length") {
    FiberLink link = single_span();
    link.dispersion_ps_nm_km = 0.0;
    const auto in = launched(16, 512, 8.0);
    const auto out = ssfm_propagate(in, link, {});
    const double a = link.alpha_per_km();
    const double l_eff = (1.0 - std::exp(-a * link.span_length_km)) / a;
    ComplexVector expected(in.size());
    for (std::size_t i = 0; i < in.size(); ++i)
      expected[i] = in.samples[i] * std::polar(1.0, link.gamma_per_w_km * std::norm(in.samples[i]) * l_eff);
    CHECK(testing::relative_l2(out.samples, expected) < 1e-5);
  }

  SUBCASE("power before each amplifier is 16 dB below launch") {
    FiberLink link = single_span();
    link.gamma_per_w_km = 0.0;
    const auto in = launched(16, 512, 8.0);
    const auto out = ssfm_propagate(in, link, {});
    const double amplifier_db = 10.0 * std::log10(std::exp(link.alpha_per_km() * link.span_length_km));
    CHECK(amplifier_db == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(out.power_dbm() - amplifier_db == doctest::Approx(8.0 - 16.0).epsilon(1e-9));
  }

  SUBCASE("noiseless amplifiers restore the launch power at every span start") {
    for (int spans : {1, 2, 3}) {
      FiberLink link;
      link.span_count = spans;
      const auto in = launched(16, 1024, 8.0);
      const auto out = ssfm_propagate(in, link, {});
      CHECK(std::abs(out.power_dbm() - 8.0) < 1e-9);
    }
  }

  SUBCASE("halving the step changes the output by less than 1e-4") {
    const auto link = FiberLink{};
    const auto in = launched(16, 2048, 8.0);
    const auto coarse = ssfm_propagate(in, link, {0.1});
    const auto fine = ssfm_propagate(in, link, {0.05});
    CHECK(testing::relative_l2(coarse.samples, fine.samples) < 1e-4);
  }

  SUBCASE("coarse steps raise a diagnostic") {
    Diagnostics d;
    ssfm_propagate(launched(16, 256, 8.0), single_span(), {20.0}, &d);
    CHECK(!d.warnings.empty());
  }

  SUBCASE("steps that do not divide the span are rejected") {
    CHECK_THROWS_AS(ssfm_propagate(launched(4, 64, 0.0), single_span(), {0.3}), std::invalid_argument);
  }
}

TEST_CASE("additive white Gaussian noise") {
  const auto in = launched(16, std::size_t{1} << 19, 0.0);
  REQUIRE(in.size() == std::size_t{1} << 20);

  SUBCASE("zero PSD is the identity") {
    const auto out = add_awgn(in, {0.0, 5});
    CHECK(out.samples == in.samples);
  }

  SUBCASE("per-sample variance") {
    const double n0 = 1e-15;
    const auto out = add_awgn(in, {n0, 5});
    const double n = double(in.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) sum += std::norm(out.samples[i] - in.samples[i]);
    const double expected = noise_variance(n0, in.sample_period);
    // |n|^2 of circular Gaussian noise is exponential: standard deviation equals its mean.
    CHECK(std::abs(sum / n - expected) <= 3.0 * expected / std::sqrt(n));
  }

  SUBCASE("different seeds are uncorrelated") {
    Waveform zero = in;
    for (auto& s : zero.samples) s = 0.0;
    const auto a = add_awgn(zero, {1e-15, 1});
    const auto b = add_awgn(zero, {1e-15, 2});
    Complex cross = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cross += a.samples[i] * std::conj(b.samples[i]);
    const double rho = std::abs(cross) / std::sqrt(testing::energy(a.samples) * testing::energy(b.samples));
    CHECK(rho < 4.0 / std::sqrt(double(a.size())));
  }

  SUBCASE("scaling commutes with noise addition") {
    const double c = 3.0, n0 = 2e-16;
    const auto first = scaled(add_awgn(in, {n0, 9}), c);
    const auto second = add_awgn(scaled(in, c), {n0 * c * c, 9});
    CHECK(testing::relative_l2(first.samples, second.samples) < 1e-14);
  }

  SUBCASE("negative PSD is rejected") { CHECK_THROWS(add_awgn(in, {-1.0, 1})); }
}

TEST_CASE("noise calibration") {
  const ShapingConfig shaping;
  const double p0_dbm = 0.0;
  auto spec = std::make_shared<const ConstellationSpec>(build_qam(16));
  const auto frame = generate_symbols(spec, std::size_t{1} << 17, 21);
  const auto wave = set_launch_power(rrc_shape(frame, shaping), p0_dbm);
  FiberLink back_to_back;
  back_to_back.gamma_per_w_km = 0.0;
  back_to_back.dispersion_ps_nm_km = 0.0;
  const double es = dbm_to_watts(p0_dbm) / shaping.symbol_rate;

  auto measure = [&](double n0) {
    return decide_frame(add_awgn(wave, {n0, 77}), frame, back_to_back, shaping, p0_dbm, {})
        .measured_ser;
  };

  SUBCASE("AWGN-only channel matches the closed-form inverse") {
    for (double target : {0.02, 0.08}) {
      CalibrationOptions options;
      options.symbol_energy = es;
      options.relative_tolerance = 0.01;
      const auto cal = n0_for_target_ser(*spec, target, measure, options);
      const double analytic = es / es_over_n0_for_ser(16, target);
      INFO("target " << target << " n0 " << cal.n0 << " analytic " << analytic);
      CHECK(std::abs(cal.n0 / analytic - 1.0) < 0.02);
      CHECK(std::abs(cal.measured_ser - target) <= 0.01 * target);
    }
  }

  SUBCASE("a target below the noiseless floor is infeasible") {
    auto floor_at_ten_percent = [](double n0) { return 0.1 + n0; };
    CalibrationOptions options;
    options.symbol_energy = es;
    CHECK_THROWS_AS(n0_for_target_ser(*spec, 0.02, floor_at_ten_percent, options),
                    InfeasibleTargetError);
    try {
      n0_for_target_ser(*spec, 0.02, floor_at_ten_percent, options);
    } catch (const InfeasibleTargetError& e) {
      CHECK(e.ser_floor() == doctest::Approx(0.1));
    }
  }

  SUBCASE("targets outside (0, 0.3] are rejected") {
    CalibrationOptions options;
    options.symbol_energy = es;
    CHECK_THROWS_AS(n0_for_target_ser(*spec, 0.0, measure, options), std::invalid_argument);
    CHECK_THROWS_AS(n0_for_target_ser(*spec, 0.5, measure, options), std::invalid_argument);
  }
}

TEST_CASE("reference profile") {
  const FiberLink link;
  const double g0 = link.gamma_per_w_km * dbm_to_watts(8.0);
  CHECK(reference_gamma_prime(link, 8.0, 0.0) == doctest::Approx(g0).epsilon(1e-14));
  CHECK(reference_gamma_prime(link, 8.0, 80.0) == doctest::Approx(g0).epsilon(1e-14));
  CHECK(reference_gamma_prime(link, 8.0, 40.0) == doctest::Approx(g0 * std::pow(10.0, -0.8)).epsilon(1e-12));
  CHECK(reference_gamma_prime(link, 8.0, 200.0) == doctest::Approx(g0 * std::pow(10.0, -0.8)).epsilon(1e-12));

  const auto profile = reference_profile(link, 8.0);
  CHECK(profile.positions_km.size() == 240);
  CHECK(profile.positions_km.back() == doctest::Approx(239.0));
  for (std::size_t k = 0; k < profile.positions_km.size(); ++k)
    CHECK(profile.gamma_prime[k] ==
          doctest::Approx(reference_gamma_prime(link, 8.0, profile.positions_km[k])).epsilon(1e-15));
}
