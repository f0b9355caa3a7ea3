#pragma once

#include <cstddef>

#include "noisyknn/nn_index.hpp"
#include "noisyknn/types.hpp"

namespace noisyknn {

// Guard for the corrected-regression denominator 1 - p0_hat - p1_hat.
inline constexpr double kDenominatorEpsilon = 1e-9;

// kNN regression estimate: predict(x) is the mean response of the k nearest
// sample points. Responses are summed in neighbour order (ascending distance,
// ties by dataset index), which pins the floating-point result exactly.
class KnnRegressor {
 public:
  KnnRegressor(RegressionSample sample, std::size_t k, Metric metric,
               IndexBackend backend = IndexBackend::kAuto);

  double predict(const Point& x) const;

  std::size_t k() const { return k_; }
  std::size_t size() const { return index_.size(); }
  std::size_t dim() const { return index_.dim(); }
  const NnIndex& index() const { return index_; }
  const std::vector<double>& responses() const { return responses_; }

 private:
  NnIndex index_;
  std::vector<double> responses_;
  std::size_t k_;
};

// Standard kNN plug-in classifier: 1{predict(x) >= 1/2}, boundary inclusive.
int classify_standard(const KnnRegressor& regressor, const Point& x);

// Empirical extrema of the regression estimate over the sample points
// (each point is its own first neighbour).
double estimate_max(const KnnRegressor& regressor);
double estimate_min(const KnnRegressor& regressor);
double estimate_max(const RegressionSample& sample, std::size_t k,
                    const Metric& metric,
                    IndexBackend backend = IndexBackend::kAuto);
double estimate_min(const RegressionSample& sample, std::size_t k,
                    const Metric& metric,
                    IndexBackend backend = IndexBackend::kAuto);

// Noise-rate estimates from the extrema of the corrupted regression
// estimate: p0_hat = min_i predict(X_i), p1_hat = 1 - max_i predict(X_i).
// `degenerate` is set when p0_hat + p1_hat >= 1.
NoiseRates estimate_noise_rates(const KnnRegressor& regressor);
NoiseRates estimate_noise_rates(const RegressionSample& sample, std::size_t k,
                                const Metric& metric,
                                IndexBackend backend = IndexBackend::kAuto);

// Ratio correction (eta_hat_corr - p0_hat) / (1 - p0_hat - p1_hat). Throws
// DegenerateRatesError when the denominator is <= kDenominatorEpsilon.
double corrected_regression_value(double eta_corr_hat, const NoiseRates& rates,
                                  bool clamp);

// Label-noise-robust kNN classifier. Fitting runs the three steps: kNN
// estimate of the corrupted regression function, rate estimation from its
// empirical extrema, and the shifted decision threshold
// (1 + p0_hat - p1_hat) / 2. Classification stays well defined under
// degenerate rate estimates; only the ratio correction needs the denominator.
class RobustKnnModel {
 public:
  struct Summary {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::size_t k = 0;
    double p0_hat = 0.0;
    double p1_hat = 0.0;
    double threshold = 0.0;
    bool degenerate = false;
  };

  static RobustKnnModel fit(RegressionSample sample, std::size_t k,
                            Metric metric,
                            IndexBackend backend = IndexBackend::kAuto);

  // Skips rate estimation and uses the supplied rates in the threshold.
  static RobustKnnModel fit_with_rates(RegressionSample sample, std::size_t k,
                                       NoiseRates rates, Metric metric,
                                       IndexBackend backend =
                                           IndexBackend::kAuto);

  // 1{predict(x) >= threshold}, boundary inclusive.
  int classify(const Point& x) const;

  double predict(const Point& x) const { return regressor_.predict(x); }

  // Corrected regression estimate, clamped to [0, 1] for reporting.
  double corrected_regression(const Point& x) const;
  // Unclamped ratio, for diagnostics.
  double corrected_regression_raw(const Point& x) const;

  const KnnRegressor& regressor() const { return regressor_; }
  const NoiseRates& rates() const { return rates_; }
  double threshold() const { return threshold_; }
  std::size_t k() const { return regressor_.k(); }
  Summary summary() const;

 private:
  RobustKnnModel(KnnRegressor regressor, NoiseRates rates);

  KnnRegressor regressor_;
  NoiseRates rates_;
  double threshold_;
};

}  // namespace noisyknn
