#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "doctest.h"
#include "ppe/constellation.hpp"
#include "support.hpp"

using namespace ppe;

namespace {

// Adaptive Simpson quadrature of the standard normal density on [a, b].
double simpson(const std::function<double(double)>& f, double a, double b, double whole,
               double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = (m - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + m)) + f(m));
  const double right = (b - m) / 6.0 * (f(m) + 4.0 * f(0.5 * (m + b)) + f(b));
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, left, tol / 2.0, depth - 1) +
         simpson(f, m, b, right, tol / 2.0, depth - 1);
}

double q_by_quadrature(double x) {
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * kPi); };
  const double b = 40.0;
  const double whole = (b - x) / 6.0 * (pdf(x) + 4.0 * pdf(0.5 * (x + b)) + pdf(b));
  return simpson(pdf, x, b, whole, 1e-14, 60);
}

// Level step between two indices on each rail.
std::pair<int, int> steps(const ConstellationSpec& spec, SymbolIndex truth, SymbolIndex decided) {
  return {spec.level_i[decided] - spec.level_i[truth], spec.level_q[decided] - spec.level_q[truth]};
}

}  // namespace

TEST_CASE("4-QAM points are the unit-energy corners") {
  const auto spec = build_qam(4);
  REQUIRE(spec.points.size() == 4);
  const double a = 1.0 / std::sqrt(2.0);
  for (const Complex expected : {Complex{a, a}, Complex{a, -a}, Complex{-a, a}, Complex{-a, -a}}) {
    const bool found = std::any_of(spec.points.begin(), spec.points.end(),
                                   [&](Complex p) { return std::abs(p - expected) < 1e-15; });
    CHECK(found);
  }
  CHECK(spec.average_energy == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("square QAM has unit mean energy and distinct points") {
  for (int m : {4, 16, 64, 256}) {
    const auto spec = build_qam(m);
    REQUIRE(static_cast<int>(spec.points.size()) == m);
    double e = 0.0;
    for (auto p : spec.points) e += std::norm(p);
    CHECK(e / m == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("64-QAM minimum spacing by brute force") {
  const auto spec = build_qam(64);
  double best = 1e9;
  for (std::size_t i = 0; i < spec.points.size(); ++i)
    for (std::size_t j = i + 1; j < spec.points.size(); ++j)
      best = std::min(best, std::abs(spec.points[i] - spec.points[j]));
  CHECK(best == doctest::Approx(2.0 / std::sqrt(42.0)).epsilon(1e-14));
}

TEST_CASE("Gray mapping: horizontal and vertical neighbours differ in one bit") {
  for (int m : {16, 64}) {
    const auto spec = build_qam(m);
    for (int li = 0; li < spec.side; ++li)
      for (int lq = 0; lq < spec.side; ++lq) {
        const auto here = spec.index_of_levels[li * spec.side + lq];
        if (li + 1 < spec.side)
          CHECK(std::popcount(here ^ spec.index_of_levels[(li + 1) * spec.side + lq]) == 1);
        if (lq + 1 < spec.side)
          CHECK(std::popcount(here ^ spec.index_of_levels[li * spec.side + lq + 1]) == 1);
      }
  }
}

TEST_CASE("non-square or invalid orders are rejected") {
  for (int m : {0, 1, 2, 8, 32, 15})
    CHECK_THROWS(build_qam(m));
}

TEST_CASE("hard decision") {
  const auto spec = build_qam(16);

  SUBCASE("a constellation point decides to itself") {
    for (SymbolIndex s = 0; s < 16; ++s) CHECK(hard_decide(spec.points[s], spec) == s);
  }

  SUBCASE("shrunk and slightly perturbed points keep their index") {
    for (SymbolIndex s = 0; s < 16; ++s)
      CHECK(hard_decide(0.9 * spec.points[s] + Complex{0.01, -0.01}, spec) == s);
  }

  SUBCASE("origin ties resolve to the lowest index for 4-QAM") {
    const auto qpsk = build_qam(4);
    CHECK(hard_decide(Complex{0.0, 0.0}, qpsk) == 0);
  }

  SUBCASE("agrees with exhaustive nearest-point search") {
    const auto big = build_qam(64);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.3, 1.3);
    for (int n = 0; n < 20000; ++n) {
      const Complex y{u(rng), u(rng)};
      SymbolIndex best = 0;
      for (SymbolIndex k = 1; k < 64; ++k)
        if (std::abs(y - big.points[k]) < std::abs(y - big.points[best])) best = k;
      CHECK(hard_decide(y, big) == best);
    }
  }

  SUBCASE("span overload matches the scalar one") {
    const ComplexVector ys{{0.3, 0.1}, {-0.9, 0.8}, {0.05, -1.2}};
    const auto decided = hard_decide(ys, spec);
    for (std::size_t i = 0; i < ys.size(); ++i) CHECK(decided[i] == hard_decide(ys[i], spec));
  }
}

TEST_CASE("Q function") {
  CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q_function(40.0) < 1e-300);
  CHECK(q_function(40.0) >= 0.0);
  CHECK(std::abs(q_function(1.0) - q_by_quadrature(1.0)) < 1e-10);
  CHECK(std::abs(q_function(1.0) - 0.15865525393145705) < 1e-12);
  for (double x : {0.25, 2.0, 3.5, 5.0})
    CHECK(std::abs(q_function(x) - q_by_quadrature(x)) / q_by_quadrature(x) < 1e-8);
}

TEST_CASE("M-ASK error rate") {
  for (int m : {2, 4, 8}) CHECK(ser_mask(m, 0.0) == doctest::Approx((m - 1.0) / m).epsilon(1e-14));
  CHECK(ser_mask(2, 4.5) == doctest::Approx(q_function(3.0)).epsilon(1e-14));

  SUBCASE("4-ASK at Es/N0 = 10 against a decision experiment") {
    // Levels -3, -1, 1, 3 scaled to unit energy; real noise of variance N0/2.
    const double esn0 = 10.0;
    const double scale = 1.0 / std::sqrt(5.0);
    const double sigma = std::sqrt(0.5 / esn0);
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> pick(0, 3);
    std::normal_distribution<double> noise(0.0, sigma);
    const long trials = 10'000'000;
    long errors = 0;
    for (long n = 0; n < trials; ++n) {
      const int level = pick(rng);
      const double y = (2.0 * level - 3.0) * scale + noise(rng);
      const int decided = std::clamp(static_cast<int>(std::floor(y / (2.0 * scale) + 2.0)), 0, 3);
      errors += decided != level;
    }
    const double p = ser_mask(4, esn0);
    CHECK(std::abs(errors / double(trials) - p) <= 3.0 * testing::binomial_sigma(p, trials));
  }
}

TEST_CASE("M-QAM error rate") {
  CHECK(ser_mqam(4, 0.0) == doctest::Approx(0.75).epsilon(1e-14));

  SUBCASE("product identity at one percent rail error") {
    // Find Es/N0 with ser_mask(4, Es/N0 / 2) = 0.01 by bisection.
    double lo = 0.0, hi = 1000.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (ser_mask(4, mid / 2.0) > 0.01 ? lo : hi) = mid;
    }
    CHECK(ser_mqam(16, 0.5 * (lo + hi)) == doctest::Approx(0.0199).epsilon(1e-10));
  }

  SUBCASE("16-QAM at Es/N0 = 20 against a decision experiment") {
    const auto spec = build_qam(16);
    const double esn0 = 20.0;
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<SymbolIndex> pick(0, 15);
    std::normal_distribution<double> noise(0.0, std::sqrt(0.5 / esn0));
    const long trials = 2'000'000;
    long errors = 0;
    for (long n = 0; n < trials; ++n) {
      const SymbolIndex s = pick(rng);
      errors += hard_decide(spec.points[s] + Complex{noise(rng), noise(rng)}, spec) != s;
    }
    const double p = ser_mqam(16, esn0);
    CHECK(std::abs(errors / double(trials) - p) <= 3.0 * testing::binomial_sigma(p, trials));
  }

  SUBCASE("strictly decreasing in Es/N0 and increasing in M") {
    for (int m : {4, 16, 64}) {
      double previous = 1.0;
      for (double db = -5.0; db <= 25.0; db += 0.5) {
        const double v = ser_mqam(m, std::pow(10.0, db / 10.0));
        CHECK(v < previous);
        previous = v;
      }
    }
    for (double db : {0.0, 10.0, 18.0}) {
      const double esn0 = std::pow(10.0, db / 10.0);
      CHECK(ser_mqam(4, esn0) < ser_mqam(16, esn0));
      CHECK(ser_mqam(16, esn0) < ser_mqam(64, esn0));
    }
  }

  SUBCASE("inverse") {
    for (int m : {4, 16, 64})
      for (double ser : {1e-3, 2e-2, 8e-2})
        CHECK(ser_mqam(m, es_over_n0_for_ser(m, ser)) == doctest::Approx(ser).epsilon(1e-9));
  }
}

TEST_CASE("edge error rate") {
  CHECK(edge_ser_from_overall(16, 0.0) == 0.0);
  CHECK(edge_ser_from_overall(4, 0.75) == doctest::Approx(0.5).epsilon(1e-14));

  SUBCASE("matches the Gaussian edge-level tail") {
    for (int m : {4, 16, 64})
      for (double ser : {1e-3, 1e-2, 1e-1}) {
        const double esn0 = es_over_n0_for_ser(m, ser);
        const double expected = q_function(std::sqrt(3.0 * esn0 / (m - 1.0)));
        CHECK(edge_ser_from_overall(m, ser) == doctest::Approx(expected).epsilon(1e-8));
      }
  }

  SUBCASE("round trip through the rail and product rules") {
    for (int m : {4, 16, 64, 256})
      for (double ser : {1e-4, 1e-3, 1e-2, 5e-2, 1e-1, 2e-1}) {
        const double side = std::sqrt(double(m));
        const double edge = edge_ser_from_overall(m, ser);
        const double rail = 2.0 * (side - 1.0) / side * edge;
        const double back = 1.0 - (1.0 - rail) * (1.0 - rail);
        CHECK(std::abs(back - ser) < 1e-12);
      }
  }
}

TEST_CASE("error-vector PMF") {
  SUBCASE("4-QAM conditional probabilities per outcome") {
    const auto spec = build_qam(4);
    for (double ser : {1e-3, 2e-2, 8e-2, 0.3}) {
      const auto pmf = error_pmf(spec, ser);
      const double s1 = ser + std::sqrt(1.0 - ser) - 1.0;
      const double s2 = -ser - 2.0 * std::sqrt(1.0 - ser) + 2.0;
      for (SymbolIndex a = 0; a < 4; ++a) {
        double reachable_total = 0.0;
        for (std::size_t k = 0; k < pmf.support.size(); ++k) {
          const double c = pmf.conditional(spec, a, k);
          const auto cls = pmf.support.class_of[k];
          if (c == 0.0) continue;
          reachable_total += c;
          if (cls == kSingleRail) CHECK(c == doctest::Approx(s1).epsilon(1e-12));
          if (cls == kDiagonal) CHECK(c == doctest::Approx(s2).epsilon(1e-12));
          if (cls == kNoError) CHECK(c == doctest::Approx(1.0 - ser).epsilon(1e-12));
        }
        CHECK(reachable_total == doctest::Approx(1.0).epsilon(1e-12));
      }
      // Two S1 and one S2 outcome are reachable from every corner.
      CHECK(pmf.class_probability(kSingleRail) == doctest::Approx(2.0 * s1).epsilon(1e-12));
      CHECK(pmf.class_probability(kDiagonal) == doctest::Approx(s2).epsilon(1e-12));
    }
  }

  SUBCASE("error-free case") {
    for (int m : {4, 16, 64}) {
      const auto pmf = error_pmf(build_qam(m), 0.0);
      for (std::size_t k = 0; k < pmf.support.size(); ++k)
        CHECK(pmf.probability[k] == (pmf.support.class_of[k] == kNoError ? 1.0 : 0.0));
    }
  }

  SUBCASE("sums to one") {
    for (int m : {4, 16, 64})
      for (double ser : {1e-3, 1e-2, 1e-1}) {
        const auto pmf = error_pmf(build_qam(m), ser);
        CHECK(std::abs(pmf.total() - 1.0) < 1e-12);
        CHECK(pmf.class_probability(kNoError) == doctest::Approx(1.0 - ser).epsilon(1e-12));
      }
  }

  SUBCASE("class frequencies of an AWGN decision experiment") {
    for (int m : {4, 16, 64}) {
      const auto spec = build_qam(m);
      const double ser = 0.05;
      const auto pmf = error_pmf(spec, ser);
      const double esn0 = es_over_n0_for_ser(m, ser);
      std::mt19937_64 rng(300 + m);
      std::uniform_int_distribution<SymbolIndex> pick(0, m - 1);
      std::normal_distribution<double> noise(0.0, std::sqrt(0.5 / esn0));
      const long trials = 1'000'000;
      std::map<ErrorClass, long> counts;
      for (long n = 0; n < trials; ++n) {
        const SymbolIndex s = pick(rng);
        const auto d = hard_decide(spec.points[s] + Complex{noise(rng), noise(rng)}, spec);
        const auto [di, dq] = steps(spec, s, d);
        const int a = std::abs(di), b = std::abs(dq);
        ++counts[ErrorClass{std::min(a, b), std::max(a, b)}];
      }
      for (const auto cls : {kNoError, kSingleRail, kDiagonal}) {
        const double p = pmf.class_probability(cls);
        const double f = counts[cls] / double(trials);
        INFO("M " << m << " class {" << cls.minor << "," << cls.major << "} " << f << " vs " << p);
        CHECK(std::abs(f - p) <= 3.0 * testing::binomial_sigma(p, trials));
      }
    }
  }

  SUBCASE("SER outside the model's domain") {
    CHECK_THROWS(error_pmf(build_qam(16), 1.0));
    CHECK_THROWS(error_pmf(build_qam(16), -0.1));
  }
}

TEST_CASE("symbol_points maps indices") {
  const auto spec = build_qam(16);
  const std::vector<SymbolIndex> idx{3, 0, 15};
  const auto pts = symbol_points(idx, spec);
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK(pts[i] == spec.points[idx[i]]);
}
