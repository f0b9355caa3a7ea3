#pragma once

#include <cstdint>
#include <vector>

#include "noisyknn/rng.hpp"
#include "noisyknn/types.hpp"

namespace noisyknn {

// The class-conditional flip channel: label y flips with probability p_y,
// independently per example. Rates must describe a valid channel
// (p0, p1 in [0, 1), p0 + p1 < 1).
struct NoiseChannel {
  NoiseRates rates;
  std::uint64_t seed = 0;

  NoiseChannel(NoiseRates r, std::uint64_t seed);
};

// Flips labels through the channel. Consumes exactly one uniform draw per
// label, in dataset order; features are never touched.
std::vector<int> corrupt_labels(const std::vector<int>& labels,
                                const NoiseRates& rates, Rng& rng);
std::vector<int> corrupt_labels(const std::vector<int>& labels,
                                const NoiseChannel& channel);

// Corrupted regression function: eta_corr = (1 - p0 - p1) * eta + p0.
double corrupt_regression(double eta, const NoiseRates& rates);

// Exact inverse of corrupt_regression; requires p0 + p1 < 1.
double invert_regression(double eta_corr, const NoiseRates& rates);

}  // namespace noisyknn
