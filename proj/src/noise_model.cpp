#include "noisyknn/noise_model.hpp"

#include <stdexcept>

namespace noisyknn {

NoiseChannel::NoiseChannel(NoiseRates r, std::uint64_t seed)
    : rates(r), seed(seed) {
  if (r.p0 < 0.0 || r.p1 < 0.0 || r.p0 >= 1.0 || r.p1 >= 1.0) {
    throw std::invalid_argument("NoiseChannel: rates outside [0, 1)");
  }
  if (r.p0 + r.p1 >= 1.0) {
    throw std::invalid_argument("NoiseChannel: requires p0 + p1 < 1");
  }
}

std::vector<int> corrupt_labels(const std::vector<int>& labels,
                                const NoiseRates& rates, Rng& rng) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw std::invalid_argument("corrupt_labels: labels must be 0 or 1");
    }
    const double p = y == 1 ? rates.p1 : rates.p0;
    const bool flip = rng.uniform() < p;
    out.push_back(flip ? 1 - y : y);
  }
  return out;
}

std::vector<int> corrupt_labels(const std::vector<int>& labels,
                                const NoiseChannel& channel) {
  Rng rng(channel.seed);
  return corrupt_labels(labels, channel.rates, rng);
}

double corrupt_regression(double eta, const NoiseRates& rates) {
  return (1.0 - rates.p0 - rates.p1) * eta + rates.p0;
}

double invert_regression(double eta_corr, const NoiseRates& rates) {
  const double denom = 1.0 - rates.p0 - rates.p1;
  if (denom <= 0.0) {
    throw std::invalid_argument("invert_regression: requires p0 + p1 < 1");
  }
  return (eta_corr - rates.p0) / denom;
}

}  // namespace noisyknn
