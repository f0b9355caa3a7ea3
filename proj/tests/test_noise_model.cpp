#include <doctest.h>

#include <cmath>

#include "noisyknn/noise_model.hpp"
#include "noisyknn/rng.hpp"

using namespace noisyknn;

namespace {

NoiseRates rates(double p0, double p1) {
  NoiseRates r;
  r.p0 = p0;
  r.p1 = p1;
  return r;
}

}  // namespace

TEST_CASE("label corruption") {
  SUBCASE("noiseless channel is the identity") {
    const std::vector<int> labels{0, 1, 1, 0, 1};
    CHECK(corrupt_labels(labels, NoiseChannel(rates(0.0, 0.0), 42)) == labels);
  }
  SUBCASE("one-sided noise never flips the untouched class") {
    Rng rng(1);
    std::vector<int> labels(5000);
    for (int& y : labels) y = rng.bernoulli(0.5) ? 1 : 0;
    const auto noisy =
        corrupt_labels(labels, NoiseChannel(rates(0.0, 0.4), 7));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == 0) CHECK(noisy[i] == 0);
    }
  }
  SUBCASE("flip fraction concentrates at the rate") {
    const std::vector<int> labels(100000, 1);
    const auto noisy =
        corrupt_labels(labels, NoiseChannel(rates(0.1, 0.3), 99));
    std::size_t flips = 0;
    for (int y : noisy) flips += y == 0;
    const double fraction = static_cast<double>(flips) / 100000.0;
    CHECK(fraction == doctest::Approx(0.3).epsilon(0.034));  // 0.3 +/- 0.01
    CHECK(std::abs(fraction - 0.3) <= 0.01);
  }
  SUBCASE("same channel seed reproduces the stream") {
    Rng rng(5);
    std::vector<int> labels(200);
    for (int& y : labels) y = rng.bernoulli(0.4) ? 1 : 0;
    const NoiseChannel channel(rates(0.2, 0.1), 1234);
    CHECK(corrupt_labels(labels, channel) == corrupt_labels(labels, channel));
  }
  SUBCASE("channel validation") {
    CHECK_THROWS_AS(NoiseChannel(rates(0.6, 0.5), 0), std::invalid_argument);
    CHECK_THROWS_AS(NoiseChannel(rates(-0.1, 0.2), 0), std::invalid_argument);
    CHECK_THROWS_AS(NoiseChannel(rates(1.0, 0.0), 0), std::invalid_argument);
    Rng rng(0);
    CHECK_THROWS_AS(corrupt_labels({0, 2}, rates(0.1, 0.1), rng),
                    std::invalid_argument);
  }
}

TEST_CASE("corrupted regression relation") {
  SUBCASE("endpoints under the range assumption") {
    CHECK(corrupt_regression(0.0, rates(0.1, 0.3)) == 0.1);
    CHECK(corrupt_regression(1.0, rates(0.1, 0.3)) == doctest::Approx(0.7));
  }
  SUBCASE("interior value from the plateau") {
    CHECK(corrupt_regression(7.0 / 12.0, rates(0.1, 0.3)) ==
          doctest::Approx(0.45).epsilon(1e-15));
  }
  SUBCASE("inverse relation") {
    CHECK(invert_regression(0.45, rates(0.1, 0.3)) ==
          doctest::Approx(7.0 / 12.0).epsilon(1e-15));
    CHECK(invert_regression(0.37, rates(0.0, 0.0)) == 0.37);
    CHECK_THROWS_AS(invert_regression(0.5, rates(0.5, 0.5)),
                    std::invalid_argument);
  }
  SUBCASE("round trip to machine precision over random tuples") {
    Rng rng(2718);
    for (int t = 0; t < 10000; ++t) {
      const double p0 = rng.uniform(0.0, 0.6);
      const double p1 = rng.uniform(0.0, 0.99 - p0);
      const double eta = rng.uniform();
      const NoiseRates r = rates(p0, p1);
      CHECK(invert_regression(corrupt_regression(eta, r), r) ==
            doctest::Approx(eta).epsilon(1e-9));
    }
  }
  SUBCASE("affine, strictly increasing, range-preserving") {
    Rng rng(33);
    for (int t = 0; t < 2000; ++t) {
      const double p0 = rng.uniform(0.0, 0.5);
      const double p1 = rng.uniform(0.0, 0.5 - p0 / 2.0);
      const NoiseRates r = rates(p0, p1);
      double a = rng.uniform();
      double b = rng.uniform();
      if (a > b) std::swap(a, b);
      const double ca = corrupt_regression(a, r);
      const double cb = corrupt_regression(b, r);
      if (a < b) CHECK(ca < cb);
      CHECK(ca >= 0.0);
      CHECK(cb <= 1.0);
      // Affine: midpoint maps to midpoint.
      CHECK(corrupt_regression(0.5 * (a + b), r) ==
            doctest::Approx(0.5 * (ca + cb)).epsilon(1e-12));
    }
  }
}

TEST_CASE("channel and regression relation agree empirically") {
  // Fixed x with eta(x) = 0.3; the corrupted-positive frequency over draws
  // of (Y, flip) must match corrupt_regression(eta).
  const double eta = 0.3;
  const NoiseRates r = rates(0.15, 0.25);
  const double target = corrupt_regression(eta, r);
  Rng rng(808);
  const std::size_t reps = 100000;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < reps; ++i) {
    const int y = rng.bernoulli(eta) ? 1 : 0;
    const double flip_p = y == 1 ? r.p1 : r.p0;
    const int noisy = rng.bernoulli(flip_p) ? 1 - y : y;
    positives += noisy;
  }
  const double freq = static_cast<double>(positives) / reps;
  CHECK(std::abs(freq - target) <= 3.0 * std::sqrt(0.25 / reps));
}
