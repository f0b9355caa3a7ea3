#include "noisyknn/knn_core.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace noisyknn {

KnnRegressor::KnnRegressor(RegressionSample sample, std::size_t k,
                           Metric metric, IndexBackend backend)
    : index_(std::move(sample.points), std::move(metric), backend),
      responses_(std::move(sample.responses)),
      k_(k) {
  if (responses_.size() != index_.size()) {
    throw std::invalid_argument(
        "KnnRegressor: responses and points differ in length");
  }
  for (double z : responses_) {
    if (!(z >= 0.0 && z <= 1.0)) {
      throw std::invalid_argument("KnnRegressor: response outside [0, 1]");
    }
  }
  if (k_ < 1 || k_ > index_.size()) {
    throw std::invalid_argument("KnnRegressor: k out of range [1, n]");
  }
}

double KnnRegressor::predict(const Point& x) const {
  const NeighborList nn = index_.query(x, k_);
  double sum = 0.0;
  for (std::size_t i : nn.indices) sum += responses_[i];
  return sum / static_cast<double>(k_);
}

int classify_standard(const KnnRegressor& regressor, const Point& x) {
  return regressor.predict(x) >= 0.5 ? 1 : 0;
}

namespace {

std::pair<double, double> predict_extrema(const KnnRegressor& regressor) {
  double lo = 1.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < regressor.size(); ++i) {
    const double v = regressor.predict(regressor.index().point(i));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace

double estimate_max(const KnnRegressor& regressor) {
  return predict_extrema(regressor).second;
}

double estimate_min(const KnnRegressor& regressor) {
  return predict_extrema(regressor).first;
}

double estimate_max(const RegressionSample& sample, std::size_t k,
                    const Metric& metric, IndexBackend backend) {
  return estimate_max(KnnRegressor(sample, k, metric, backend));
}

double estimate_min(const RegressionSample& sample, std::size_t k,
                    const Metric& metric, IndexBackend backend) {
  return estimate_min(KnnRegressor(sample, k, metric, backend));
}

NoiseRates estimate_noise_rates(const KnnRegressor& regressor) {
  const auto [lo, hi] = predict_extrema(regressor);
  NoiseRates rates;
  rates.p0 = lo;
  rates.p1 = 1.0 - hi;
  rates.degenerate = rates.p0 + rates.p1 >= 1.0;
  return rates;
}

NoiseRates estimate_noise_rates(const RegressionSample& sample, std::size_t k,
                                const Metric& metric, IndexBackend backend) {
  return estimate_noise_rates(KnnRegressor(sample, k, metric, backend));
}

double corrected_regression_value(double eta_corr_hat, const NoiseRates& rates,
                                  bool clamp) {
  const double denom = 1.0 - rates.p0 - rates.p1;
  if (denom <= kDenominatorEpsilon) {
    throw DegenerateRatesError(
        "corrected regression undefined: 1 - p0_hat - p1_hat <= 1e-9");
  }
  const double raw = (eta_corr_hat - rates.p0) / denom;
  if (!clamp) return raw;
  return std::clamp(raw, 0.0, 1.0);
}

RobustKnnModel::RobustKnnModel(KnnRegressor regressor, NoiseRates rates)
    : regressor_(std::move(regressor)),
      rates_(rates),
      threshold_(0.5 * (1.0 + rates.p0 - rates.p1)) {}

RobustKnnModel RobustKnnModel::fit(RegressionSample sample, std::size_t k,
                                   Metric metric, IndexBackend backend) {
  KnnRegressor regressor(std::move(sample), k, std::move(metric), backend);
  const NoiseRates rates = estimate_noise_rates(regressor);
  return RobustKnnModel(std::move(regressor), rates);
}

RobustKnnModel RobustKnnModel::fit_with_rates(RegressionSample sample,
                                              std::size_t k, NoiseRates rates,
                                              Metric metric,
                                              IndexBackend backend) {
  if (rates.p0 < 0.0 || rates.p1 < 0.0 || rates.p0 >= 1.0 || rates.p1 >= 1.0) {
    throw std::invalid_argument("RobustKnnModel: rates outside [0, 1)");
  }
  rates.degenerate = rates.p0 + rates.p1 >= 1.0;
  KnnRegressor regressor(std::move(sample), k, std::move(metric), backend);
  return RobustKnnModel(std::move(regressor), rates);
}

int RobustKnnModel::classify(const Point& x) const {
  return predict(x) >= threshold_ ? 1 : 0;
}

double RobustKnnModel::corrected_regression(const Point& x) const {
  return corrected_regression_value(predict(x), rates_, /*clamp=*/true);
}

double RobustKnnModel::corrected_regression_raw(const Point& x) const {
  return corrected_regression_value(predict(x), rates_, /*clamp=*/false);
}

RobustKnnModel::Summary RobustKnnModel::summary() const {
  Summary s;
  s.n = regressor_.size();
  s.dim = regressor_.dim();
  s.k = regressor_.k();
  s.p0_hat = rates_.p0;
  s.p1_hat = rates_.p1;
  s.threshold = threshold_;
  s.degenerate = rates_.degenerate;
  return s;
}

}  // namespace noisyknn
