#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace noisyknn {

// A feature vector. Dimension is fixed per dataset.
using Point = std::vector<double>;

// Raised when an operation needs 1 - p0_hat - p1_hat > 0 but the estimated
// rates are degenerate.
struct DegenerateRatesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised on malformed input files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Class-conditional flip probabilities: p0 = P(observed 1 | true 0),
// p1 = P(observed 0 | true 1). True rates satisfy p0 + p1 < 1; estimated
// rates may not, in which case `degenerate` is set.
struct NoiseRates {
  double p0 = 0.0;
  double p1 = 0.0;
  bool degenerate = false;

  double sum() const { return p0 + p1; }
};

// Squared Euclidean distance with fixed left-to-right accumulation. Both
// index backends and every test oracle must use this exact routine so that
// distance comparisons (and hence tie handling) agree bitwise.
inline double squared_euclidean(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Either the built-in Euclidean metric or a user-supplied distance callback.
// Custom callbacks are assumed symmetric, non-negative and zero on the
// diagonal; the index only verifies what it can cheaply sample.
class Metric {
 public:
  using DistanceFn = std::function<double(const Point&, const Point&)>;

  static Metric euclidean() { return Metric{}; }

  static Metric custom(DistanceFn fn) {
    Metric m;
    m.fn_ = std::move(fn);
    return m;
  }

  bool is_euclidean() const { return !fn_; }

  double operator()(const Point& a, const Point& b) const {
    if (fn_) return fn_(a, b);
    return std::sqrt(squared_euclidean(a, b));
  }

 private:
  Metric() = default;
  DistanceFn fn_;
};

// Binary-labelled point set (possibly label-corrupted).
struct LabeledDataset {
  std::vector<Point> points;
  std::vector<int> labels;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
};

// Points paired with responses in [0, 1]; binary labels are the special case
// responses in {0, 1}.
struct RegressionSample {
  std::vector<Point> points;
  std::vector<double> responses;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
};

inline RegressionSample to_regression_sample(const LabeledDataset& data) {
  RegressionSample s;
  s.points = data.points;
  s.responses.reserve(data.labels.size());
  for (int y : data.labels) s.responses.push_back(static_cast<double>(y));
  return s;
}

}  // namespace noisyknn
