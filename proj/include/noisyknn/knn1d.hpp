#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace noisyknn {

// Exact kNN regression sweep for one-dimensional Euclidean samples.
//
// After sorting, the k nearest neighbours of any query form a contiguous
// window of the sorted coordinates, and the active window switches exactly
// at the midpoints (x_{w-1} + x_{w+k-1}) / 2. One prefix-sum pass yields all
// window means, so fitting costs O(n log n) and a query O(log n). For binary
// responses the prefix sums are exact integers, making every value bitwise
// equal to the direct k-term mean of KnnRegressor.
//
// Exact distance ties across a window boundary are resolved by the midpoint
// convention instead of the dataset-index rule; for samples drawn from a
// continuous marginal such ties have probability zero.
class Knn1dRegressor {
 public:
  Knn1dRegressor(std::vector<double> xs, std::vector<double> zs, std::size_t k)
      : k_(k) {
    const std::size_t n = xs.size();
    if (n == 0 || zs.size() != n) {
      throw std::invalid_argument(
          "Knn1dRegressor: coordinates and responses must match, non-empty");
    }
    if (k_ < 1 || k_ > n) {
      throw std::invalid_argument("Knn1dRegressor: k out of range [1, n]");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (xs[a] != xs[b]) return xs[a] < xs[b];
      return a < b;
    });
    sorted_x_.resize(n);
    std::vector<double> sorted_z(n);
    for (std::size_t i = 0; i < n; ++i) {
      sorted_x_[i] = xs[order[i]];
      sorted_z[i] = zs[order[i]];
    }

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted_z[i];

    const std::size_t windows = n - k_ + 1;
    means_.resize(windows);
    for (std::size_t w = 0; w < windows; ++w) {
      means_[w] = (prefix[w + k_] - prefix[w]) / static_cast<double>(k_);
    }
    transitions_.resize(windows - 1);
    for (std::size_t w = 1; w < windows; ++w) {
      transitions_[w - 1] = 0.5 * (sorted_x_[w - 1] + sorted_x_[w + k_ - 1]);
    }
  }

  std::size_t k() const { return k_; }
  std::size_t size() const { return sorted_x_.size(); }

  // Regression value at q: the mean of the active window.
  double value_at(double q) const {
    const auto it =
        std::upper_bound(transitions_.begin(), transitions_.end(), q);
    return means_[static_cast<std::size_t>(it - transitions_.begin())];
  }

  double min_over_samples() const { return sample_extrema().first; }
  double max_over_samples() const { return sample_extrema().second; }

  // (min, max) of the regression values at the sample points themselves.
  std::pair<double, double> sample_extrema() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t w = 0;
    for (std::size_t j = 0; j < sorted_x_.size(); ++j) {
      while (w < transitions_.size() && transitions_[w] <= sorted_x_[j]) ++w;
      lo = std::min(lo, means_[w]);
      hi = std::max(hi, means_[w]);
    }
    return {lo, hi};
  }

  // Cell decomposition of a thresholded classifier 1{value >= threshold}:
  // boundaries are the window transitions, decisions one per window.
  void decision_cells(double threshold, std::vector<double>& boundaries,
                      std::vector<int>& decisions) const {
    boundaries = transitions_;
    decisions.resize(means_.size());
    for (std::size_t w = 0; w < means_.size(); ++w) {
      decisions[w] = means_[w] >= threshold ? 1 : 0;
    }
  }

  const std::vector<double>& sorted_x() const { return sorted_x_; }
  const std::vector<double>& transitions() const { return transitions_; }
  const std::vector<double>& window_means() const { return means_; }

 private:
  std::size_t k_;
  std::vector<double> sorted_x_;
  std::vector<double> transitions_;  // size n - k
  std::vector<double> means_;        // size n - k + 1
};

}  // namespace noisyknn
