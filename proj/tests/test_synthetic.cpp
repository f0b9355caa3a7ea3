#include <doctest.h>

#include <cmath>

#include "noisyknn/noise_model.hpp"
#include "noisyknn/rng.hpp"
#include "noisyknn/synthetic.hpp"

using namespace noisyknn;

namespace {

NoiseRates rates(double p0, double p1) {
  NoiseRates r;
  r.p0 = p0;
  r.p1 = p1;
  return r;
}

// Scan-based estimate of the measure of {x : predicate(x)}; independent of
// the analytic interval arithmetic it cross-checks.
template <typename Pred>
double scan_measure(const Pred& pred, std::size_t nodes = 1000001) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x =
        (static_cast<double>(i) + 0.5) / static_cast<double>(nodes);
    if (pred(x)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(nodes);
}

}  // namespace

TEST_CASE("three-piece example construction") {
  const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
  const double m = 7.0 / 12.0;

  CHECK(dist.eta(0.0) == 0.0);
  CHECK(dist.eta(1.0) == 1.0);
  CHECK(dist.eta(0.5) == doctest::Approx(m).epsilon(1e-15));
  // Continuity at the plateau edges.
  CHECK(dist.eta(2.0 * m / 3.0) == doctest::Approx(m).epsilon(1e-12));
  CHECK(dist.eta((2.0 * m + 1.0) / 3.0) == doctest::Approx(m).epsilon(1e-12));
  CHECK(dist.regression().breakpoints()[1] ==
        doctest::Approx(7.0 / 18.0).epsilon(1e-15));
  CHECK(dist.regression().breakpoints()[2] ==
        doctest::Approx(7.0 / 18.0 + 1.0 / 3.0).epsilon(1e-15));
  CHECK(dist.smoothness().lambda == 1.0);
  CHECK(dist.smoothness().omega == 3.0);
  CHECK(dist.margin().alpha == 0.0);
  CHECK(dist.margin().c_alpha == 1.0);

  CHECK_THROWS_AS(make_plateau_example(0.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(make_plateau_example(0.1, 0.5), std::invalid_argument);
}

TEST_CASE("bayes classifier") {
  CHECK(make_constant(0.3).bayes(0.4) == 0);
  CHECK(make_constant(0.5).bayes(0.4) == 1);  // inclusive at 1/2
  const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
  CHECK(dist.bayes(0.5) == 1);   // plateau sits above 1/2
  CHECK(dist.bayes(0.2) == 0);
  CHECK(dist.bayes(0.9) == 1);
}

TEST_CASE("sampling") {
  SUBCASE("eta identically one yields all-positive labels") {
    const SyntheticDistribution dist = make_constant(1.0);
    const LabeledDataset data = dist.sample(500, 7);
    for (int y : data.labels) CHECK(y == 1);
  }
  SUBCASE("same seed reproduces the dataset") {
    const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
    const LabeledDataset a = dist.sample(300, 12);
    const LabeledDataset b = dist.sample(300, 12);
    CHECK(a.points == b.points);
    CHECK(a.labels == b.labels);
  }
  SUBCASE("positive fraction matches the integral of eta") {
    const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
    const double integral = dist.integral_eta(0.0, 1.0);
    CHECK(integral == doctest::Approx(19.0 / 36.0).epsilon(1e-12));
    const LabeledDataset data = dist.sample(100000, 99);
    double positives = 0;
    for (int y : data.labels) positives += y;
    CHECK(std::abs(positives / 100000.0 - integral) <= 0.01);
  }
}

TEST_CASE("exact integrals against scan oracles") {
  const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
  SUBCASE("integral of eta on subintervals") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      double a = rng.uniform();
      double b = rng.uniform();
      if (a > b) std::swap(a, b);
      double riemann = 0.0;
      const std::size_t nodes = 200000;
      for (std::size_t i = 0; i < nodes; ++i) {
        const double x = a + (b - a) * (static_cast<double>(i) + 0.5) /
                                 static_cast<double>(nodes);
        riemann += dist.eta(x);
      }
      riemann *= (b - a) / static_cast<double>(nodes);
      CHECK(dist.integral_eta(a, b) == doctest::Approx(riemann).epsilon(1e-6));
    }
  }
  SUBCASE("margin integral splits at the 1/2 crossing") {
    double riemann = 0.0;
    const std::size_t nodes = 2000000;
    for (std::size_t i = 0; i < nodes; ++i) {
      const double x =
          (static_cast<double>(i) + 0.5) / static_cast<double>(nodes);
      riemann += std::abs(dist.eta(x) - 0.5);
    }
    riemann /= static_cast<double>(nodes);
    CHECK(dist.abs_margin_integral(0.0, 1.0) ==
          doctest::Approx(riemann).epsilon(1e-6));
  }
}

TEST_CASE("excess risk") {
  const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);

  SUBCASE("the Bayes rule has zero excess risk") {
    CHECK(excess_risk(dist, [&](double x) { return dist.bayes(x); }) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("the anti-Bayes rule pays the full margin integral") {
    const double full = dist.abs_margin_integral(0.0, 1.0);
    CHECK(excess_risk(dist, [&](double x) { return 1 - dist.bayes(x); }) ==
          doctest::Approx(full).epsilon(1e-9));
  }
  SUBCASE("the corrupted Bayes rule pays 1/27 on the clean distribution") {
    // Plateau: (1/12) * (1/3) = 1/36; the two sloped slivers where the
    // clean and corrupted rules also disagree add 1/108 more.
    const NoiseRates r = rates(0.1, 0.3);
    const double value = excess_risk(dist, [&](double x) {
      return corrupt_regression(dist.eta(x), r) >= 0.5 ? 1 : 0;
    });
    CHECK(value == doctest::Approx(1.0 / 27.0).epsilon(1e-9));
    CHECK(value >= 1.0 / 36.0 - 1e-12);
  }
  SUBCASE("piecewise evaluation matches the scan path") {
    // Threshold rule 1{x >= t} has a single boundary.
    for (double t : {0.2, 1.0 / 3.0, 0.52, 0.9}) {
      const double scan =
          excess_risk(dist, [&](double x) { return x >= t ? 1 : 0; });
      const double cells = excess_risk_piecewise(dist, {t}, {0, 1});
      CHECK(scan == doctest::Approx(cells).epsilon(1e-9));
    }
  }
}

TEST_CASE("disagreement set") {
  const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
  const NoiseRates r = rates(0.1, 0.3);

  SUBCASE("theta = 0: exact measure, plateau contained") {
    const DisagreementSet set = disagreement_set(dist, r, 0.0);
    // Analytic value (1 - 2 p0) / (3 (1 - p0 - p1)): the plateau plus two
    // sloped slivers.
    CHECK(set.measure == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
    CHECK(set.measure >= 1.0 / 3.0);
    REQUIRE(set.intervals.size() == 1);
    CHECK(set.intervals[0].first == doctest::Approx(1.0 / 3.0));
    CHECK(set.intervals[0].second == doctest::Approx(7.0 / 9.0));

    const double scanned = scan_measure([&](double x) {
      const double e = dist.eta(x);
      const double c = corrupt_regression(e, r);
      return (e - 0.5) * (c - 0.5) < 0.0;
    });
    CHECK(set.measure == doctest::Approx(scanned).epsilon(1e-4));
  }
  SUBCASE("theta = 0.04: plateau margins 1/12 and 0.05 both qualify") {
    const DisagreementSet set = disagreement_set(dist, r, 0.04);
    CHECK(set.measure >= 1.0 / 3.0);
    const double scanned = scan_measure([&](double x) {
      const double e = dist.eta(x);
      const double c = corrupt_regression(e, r);
      return (e <= 0.46 && c >= 0.54) || (e >= 0.54 && c <= 0.46);
    });
    CHECK(set.measure == doctest::Approx(scanned).epsilon(1e-4));
    // Plateau fully contained.
    CHECK(set.intervals.front().first <= 7.0 / 18.0 + 1e-12);
    CHECK(set.intervals.back().second >= 7.0 / 18.0 + 1.0 / 3.0 - 1e-12);
  }
  SUBCASE("noiseless rates give the empty set") {
    const DisagreementSet set = disagreement_set(dist, rates(0.0, 0.0), 0.0);
    CHECK(set.measure == 0.0);
    CHECK(set.intervals.empty());
  }
  SUBCASE("measure is non-increasing in theta") {
    double prev = 2.0;
    for (double theta : {0.0, 0.01, 0.03, 0.05, 0.08, 0.2}) {
      const double m = disagreement_set(dist, r, theta).measure;
      CHECK(m <= prev + 1e-12);
      prev = m;
    }
  }
}

TEST_CASE("two-distribution excess floor holds for a classifier battery") {
  const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
  const NoiseRates r = rates(0.1, 0.3);
  const SyntheticDistribution corrupted = dist.corrupted(r);
  CHECK(corrupted.smoothness().omega == doctest::Approx(1.8));

  std::vector<std::function<int(double)>> battery;
  battery.emplace_back([](double) { return 0; });
  battery.emplace_back([](double) { return 1; });
  battery.emplace_back([&](double x) { return dist.bayes(x); });
  battery.emplace_back([&](double x) { return corrupted.bayes(x); });
  for (double t : {0.1, 0.35, 0.5, 0.65, 0.9}) {
    battery.emplace_back([t](double x) { return x >= t ? 1 : 0; });
  }

  for (double theta : {0.01, 0.04, 0.08}) {
    const double floor = theta * disagreement_set(dist, r, theta).measure;
    for (const auto& classifier : battery) {
      const double clean = excess_risk(dist, classifier);
      const double noisy = excess_risk(corrupted, classifier);
      CHECK(clean + noisy >= floor - 1e-9);
    }
  }
}

TEST_CASE("smoothness verifier") {
  const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
  SUBCASE("declared constants pass") {
    const SmoothnessReport report = verify_smoothness(dist, 100000, 17);
    CHECK(report.violations == 0);
    CHECK(report.max_ratio <= 3.0);
  }
  SUBCASE("omega = 1 is falsified") {
    const SmoothnessReport report = verify_smoothness(dist, 100000, 17, 1.0);
    CHECK(report.violations > 0);
    CHECK(report.max_ratio > 1.0);
  }
  SUBCASE("constant regression satisfies any omega") {
    const SmoothnessReport report =
        verify_smoothness(make_constant(0.4), 20000, 5, 0.001);
    CHECK(report.violations == 0);
    CHECK(report.max_ratio == 0.0);
  }
}

TEST_CASE("margin verifier") {
  SUBCASE("alpha = 0, C = 1 always passes") {
    const MarginReport report = verify_margin(make_plateau_example(0.1, 0.3),
                                              {0.01, 0.05, 0.1, 0.3, 0.5});
    CHECK(report.all_ok);
    for (const auto& row : report.rows) CHECK(row.measure <= 1.0);
  }
  SUBCASE("plateau example margin-set measure is analytic") {
    const SyntheticDistribution dist = make_plateau_example(0.1, 0.3);
    // Below the plateau margin 1/12 only the slope near x = 1/3 counts:
    // measure = 2 * (2 xi / 3).
    CHECK(dist.margin_set_measure(0.05) ==
          doctest::Approx(4.0 * 0.05 / 3.0).epsilon(1e-12));
    const double scanned = scan_measure([&](double x) {
      const double gap = std::abs(dist.eta(x) - 0.5);
      return gap > 0.0 && gap < 0.05;
    });
    CHECK(dist.margin_set_measure(0.05) ==
          doctest::Approx(scanned).epsilon(1e-3));
  }
  SUBCASE("ramp satisfies its declared (alpha=1, C=2) margin") {
    const MarginReport report =
        verify_margin(make_ramp(), {0.01, 0.1, 0.25, 0.5});
    CHECK(report.all_ok);
    for (const auto& row : report.rows) {
      CHECK(row.measure == doctest::Approx(2.0 * row.xi).epsilon(1e-12));
    }
  }
  SUBCASE("eta identically 1 has an empty margin set") {
    const MarginReport report =
        verify_margin(make_constant(1.0), {0.01, 0.2, 0.5});
    CHECK(report.all_ok);
    for (const auto& row : report.rows) CHECK(row.measure == 0.0);
  }
  SUBCASE("xi grid validation") {
    CHECK_THROWS_AS(verify_margin(make_ramp(), {0.6}), std::invalid_argument);
    CHECK_THROWS_AS(verify_margin(make_ramp(), {0.0}), std::invalid_argument);
  }
}

TEST_CASE("corrupted distribution endpoints") {
  // inf eta_corr = p0 and sup eta_corr = 1 - p1 on range-assumption
  // built-ins.
  const SyntheticDistribution dist = make_plateau_example(0.2, 0.1);
  const SyntheticDistribution corrupted = dist.corrupted(rates(0.2, 0.1));
  const auto& values = corrupted.regression().values();
  CHECK(*std::min_element(values.begin(), values.end()) ==
        doctest::Approx(0.2).epsilon(1e-15));
  CHECK(*std::max_element(values.begin(), values.end()) ==
        doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("gaussian sampling-only extra") {
  GaussianLogisticDistribution dist;
  dist.dim = 3;
  Rng rng(21);
  const LabeledDataset data = dist.sample(2000, rng);
  CHECK(data.dim() == 3);
  double positives = 0;
  for (int y : data.labels) positives += y;
  // eta is symmetric around x1 = 0, so about half the labels are positive.
  CHECK(positives / 2000.0 == doctest::Approx(0.5).epsilon(0.1));
}
