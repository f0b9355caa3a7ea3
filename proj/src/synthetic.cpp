#include "noisyknn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisyknn/noise_model.hpp"

namespace noisyknn {
namespace {

constexpr std::size_t kScanNodes = 100001;

// Simpson's rule on [a, b]; exact whenever the integrand is polynomial of
// degree <= 3, in particular on the linear sub-pieces used below.
template <typename F>
double simpson(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(a) + 4.0 * f(mid) + f(b));
}

}  // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<double> breakpoints,
                                 std::vector<double> values)
    : xs_(std::move(breakpoints)), ys_(std::move(values)) {
  if (xs_.size() < 2 || xs_.size() != ys_.size()) {
    throw std::invalid_argument(
        "PiecewiseLinear: need matching breakpoints/values, at least two");
  }
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    if (!(xs_[i] > xs_[i - 1])) {
      throw std::invalid_argument(
          "PiecewiseLinear: breakpoints must strictly increase");
    }
  }
  for (double y : ys_) {
    if (!(y >= 0.0 && y <= 1.0)) {
      throw std::invalid_argument("PiecewiseLinear: values outside [0, 1]");
    }
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (x <= xs_.front()) return ys_.front();
  if (x >= xs_.back()) return ys_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
  return ys_[lo] + t * (ys_[hi] - ys_[lo]);
}

SyntheticDistribution::SyntheticDistribution(PiecewiseLinear eta,
                                             SmoothnessParams smoothness,
                                             MarginParams margin)
    : eta_(std::move(eta)), smoothness_(smoothness), margin_(margin) {
  if (eta_.breakpoints().front() != 0.0 || eta_.breakpoints().back() != 1.0) {
    throw std::invalid_argument(
        "SyntheticDistribution: support must be exactly [0, 1]");
  }
  if (smoothness_.lambda <= 0.0 || smoothness_.omega <= 0.0) {
    throw std::invalid_argument(
        "SyntheticDistribution: smoothness parameters must be positive");
  }
  if (margin_.alpha < 0.0 || margin_.c_alpha < 1.0) {
    throw std::invalid_argument(
        "SyntheticDistribution: need alpha >= 0 and c_alpha >= 1");
  }
}

LabeledDataset SyntheticDistribution::sample(std::size_t n, Rng& rng) const {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  LabeledDataset data;
  data.points.reserve(n);
  data.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    const int y = rng.bernoulli(eta_(x)) ? 1 : 0;
    data.points.push_back(Point{x});
    data.labels.push_back(y);
  }
  return data;
}

LabeledDataset SyntheticDistribution::sample(std::size_t n,
                                             std::uint64_t seed) const {
  Rng rng(seed);
  return sample(n, rng);
}

SyntheticDistribution SyntheticDistribution::corrupted(
    const NoiseRates& rates) const {
  std::vector<double> ys;
  ys.reserve(eta_.values().size());
  for (double y : eta_.values()) ys.push_back(corrupt_regression(y, rates));
  SmoothnessParams s = smoothness_;
  s.omega *= std::max(1.0 - rates.p0 - rates.p1, 0.0);
  if (s.omega <= 0.0) s.omega = smoothness_.omega;
  return SyntheticDistribution(PiecewiseLinear(eta_.breakpoints(), ys), s,
                               margin_);
}

double SyntheticDistribution::ball_measure(double x, double r) const {
  return std::max(0.0, std::min(x + r, 1.0) - std::max(x - r, 0.0));
}

namespace {

// Splits [a, b] at the function's breakpoints and its 1/2-crossings, then
// accumulates per-segment integrals. On each segment eta is linear and
// eta - 1/2 has constant sign.
template <typename SegmentFn>
void for_each_linear_segment(const PiecewiseLinear& eta, double a, double b,
                             const SegmentFn& fn) {
  a = std::max(a, 0.0);
  b = std::min(b, 1.0);
  if (!(b > a)) return;

  const std::vector<double>& xs = eta.breakpoints();
  const std::vector<double>& ys = eta.values();
  std::vector<double> cuts{a};
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = xs[i + 1];
    if (x0 > a && x0 < b) cuts.push_back(x0);
    // 1/2-crossing inside this piece.
    const double y0 = ys[i];
    const double y1 = ys[i + 1];
    if ((y0 - 0.5) * (y1 - 0.5) < 0.0) {
      const double xc = x0 + (0.5 - y0) * (x1 - x0) / (y1 - y0);
      if (xc > a && xc < b) cuts.push_back(xc);
    }
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) fn(cuts[i], cuts[i + 1]);
  }
}

}  // namespace

double SyntheticDistribution::integral_eta(double a, double b) const {
  double total = 0.0;
  for_each_linear_segment(eta_, a, b, [&](double u, double v) {
    total += simpson([&](double x) { return eta_(x); }, u, v);
  });
  return total;
}

double SyntheticDistribution::abs_margin_integral(double a, double b) const {
  double total = 0.0;
  for_each_linear_segment(eta_, a, b, [&](double u, double v) {
    total += simpson([&](double x) { return std::abs(eta_(x) - 0.5); }, u, v);
  });
  return total;
}

double SyntheticDistribution::disagreement_integral(double a, double b,
                                                    int decision) const {
  double total = 0.0;
  for_each_linear_segment(eta_, a, b, [&](double u, double v) {
    const int segment_bayes = bayes(0.5 * (u + v));
    if (segment_bayes == decision) return;
    total += simpson([&](double x) { return std::abs(eta_(x) - 0.5); }, u, v);
  });
  return total;
}

double SyntheticDistribution::margin_set_measure(double xi) const {
  if (!(xi > 0.0)) throw std::invalid_argument("margin_set_measure: xi > 0");
  const std::vector<double>& xs = eta_.breakpoints();
  const std::vector<double>& ys = eta_.values();
  double measure = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = xs[i + 1];
    const double y0 = ys[i];
    const double y1 = ys[i + 1];
    if (y0 == y1) {
      const double gap = std::abs(y0 - 0.5);
      if (gap > 0.0 && gap < xi) measure += x1 - x0;
      continue;
    }
    // Preimage of (1/2 - xi, 1/2 + xi) under the affine piece; removing the
    // single point where eta == 1/2 does not change the measure.
    const double lo = 0.5 - xi;
    const double hi = 0.5 + xi;
    const double slope = (y1 - y0) / (x1 - x0);
    double u = x0 + (lo - y0) / slope;
    double v = x0 + (hi - y0) / slope;
    if (u > v) std::swap(u, v);
    measure += std::max(0.0, std::min(v, x1) - std::max(u, x0));
  }
  return measure;
}

SyntheticDistribution make_plateau_example(double p0, double p1) {
  if (!(p0 > 0.0 && p0 < 0.5 && p1 > 0.0 && p1 < 0.5)) {
    throw std::invalid_argument(
        "make_plateau_example: requires p0, p1 in (0, 1/2)");
  }
  const double m = (2.0 - 3.0 * p0 - p1) / (4.0 * (1.0 - p0 - p1));
  const double left = 2.0 * m / 3.0;
  const double right = (2.0 * m + 1.0) / 3.0;
  PiecewiseLinear eta({0.0, left, right, 1.0}, {0.0, m, m, 1.0});
  return SyntheticDistribution(std::move(eta), SmoothnessParams{1.0, 3.0},
                               MarginParams{0.0, 1.0});
}

SyntheticDistribution make_constant(double value) {
  PiecewiseLinear eta({0.0, 1.0}, {value, value});
  return SyntheticDistribution(std::move(eta), SmoothnessParams{1.0, 1.0},
                               MarginParams{0.0, 1.0});
}

SyntheticDistribution make_ramp() {
  PiecewiseLinear eta({0.0, 1.0}, {0.0, 1.0});
  return SyntheticDistribution(std::move(eta), SmoothnessParams{1.0, 1.0},
                               MarginParams{1.0, 2.0});
}

double excess_risk(const SyntheticDistribution& dist,
                   const std::function<int(double)>& classifier,
                   double quad_tol) {
  if (!(quad_tol > 0.0)) {
    throw std::invalid_argument("excess_risk: quad_tol must be positive");
  }

  // Scan for decision changes, then bisect each change down to a width far
  // below quad_tol. A decision region narrower than the scan step cannot be
  // detected; kNN-style classifiers should use excess_risk_piecewise.
  const double step = 1.0 / static_cast<double>(kScanNodes - 1);
  std::vector<double> boundaries;
  std::vector<int> decisions;
  int prev = classifier(0.0);
  decisions.push_back(prev);
  for (std::size_t i = 1; i < kScanNodes; ++i) {
    const double x = static_cast<double>(i) * step;
    const int cur = classifier(x);
    if (cur != prev) {
      double lo = x - step;
      double hi = x;
      const double width_target = std::min(quad_tol, 1e-10);
      while (hi - lo > width_target) {
        const double mid = 0.5 * (lo + hi);
        if (classifier(mid) == prev) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      boundaries.push_back(0.5 * (lo + hi));
      decisions.push_back(cur);
      prev = cur;
    }
  }
  return excess_risk_piecewise(dist, boundaries, decisions);
}

double excess_risk_piecewise(const SyntheticDistribution& dist,
                             const std::vector<double>& boundaries,
                             const std::vector<int>& decisions) {
  if (decisions.size() != boundaries.size() + 1) {
    throw std::invalid_argument(
        "excess_risk_piecewise: need one more decision than boundaries");
  }
  double total = 0.0;
  double lo = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const double hi = i < boundaries.size() ? boundaries[i] : 1.0;
    if (hi > lo) total += dist.disagreement_integral(lo, hi, decisions[i]);
    lo = hi;
  }
  return total;
}

namespace {

// Closed x-interval of one linear piece where the affine function with
// endpoint values (g0, g1) satisfies g >= c (dir = +1) or g <= c (dir = -1).
struct PieceInterval {
  double lo = 0.0;
  double hi = -1.0;
  bool empty() const { return !(hi > lo); }
};

PieceInterval solve_affine(double x0, double x1, double g0, double g1,
                           double c, int dir) {
  const bool ok0 = dir > 0 ? g0 >= c : g0 <= c;
  const bool ok1 = dir > 0 ? g1 >= c : g1 <= c;
  if (ok0 && ok1) return {x0, x1};
  if (!ok0 && !ok1) return {};
  const double xc = x0 + (c - g0) * (x1 - x0) / (g1 - g0);
  if (ok0) return {x0, std::min(xc, x1)};
  return {std::max(xc, x0), x1};
}

PieceInterval intersect(const PieceInterval& a, const PieceInterval& b) {
  if (a.empty() || b.empty()) return {};
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

}  // namespace

DisagreementSet disagreement_set(const SyntheticDistribution& dist,
                                 const NoiseRates& rates, double theta) {
  if (theta < 0.0) {
    throw std::invalid_argument("disagreement_set: theta must be >= 0");
  }
  const std::vector<double>& xs = dist.regression().breakpoints();
  const std::vector<double>& ys = dist.regression().values();

  DisagreementSet set;
  set.theta = theta;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = xs[i + 1];
    const double e0 = ys[i];
    const double e1 = ys[i + 1];
    const double c0 = corrupt_regression(e0, rates);
    const double c1 = corrupt_regression(e1, rates);

    // theta = 0 uses strict opposite signs; positive-length intervals are
    // unaffected by the open/closed distinction.
    const PieceInterval low_clean =
        solve_affine(x0, x1, e0, e1, 0.5 - theta, -1);
    const PieceInterval high_noisy =
        solve_affine(x0, x1, c0, c1, 0.5 + theta, +1);
    const PieceInterval high_clean =
        solve_affine(x0, x1, e0, e1, 0.5 + theta, +1);
    const PieceInterval low_noisy =
        solve_affine(x0, x1, c0, c1, 0.5 - theta, -1);

    for (const PieceInterval& iv :
         {intersect(low_clean, high_noisy), intersect(high_clean, low_noisy)}) {
      if (iv.empty()) continue;
      if (theta == 0.0) {
        // Drop pieces where either function sits exactly at 1/2 throughout;
        // the strict sign condition excludes them.
        const double mid = 0.5 * (iv.lo + iv.hi);
        const double e_mid = dist.eta(mid);
        const double c_mid = corrupt_regression(e_mid, rates);
        if ((e_mid - 0.5) * (c_mid - 0.5) >= 0.0) continue;
      }
      set.intervals.emplace_back(iv.lo, iv.hi);
    }
  }

  std::sort(set.intervals.begin(), set.intervals.end());
  // Merge touching intervals across piece boundaries.
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : set.intervals) {
    if (!merged.empty() && iv.first <= merged.back().second + 1e-15) {
      merged.back().second = std::max(merged.back().second, iv.second);
    } else {
      merged.push_back(iv);
    }
  }
  set.intervals = std::move(merged);
  for (const auto& iv : set.intervals) set.measure += iv.second - iv.first;
  return set;
}

SmoothnessReport verify_smoothness(const SyntheticDistribution& dist,
                                   std::size_t num_pairs, std::uint64_t seed,
                                   std::optional<double> omega,
                                   std::optional<double> lambda) {
  const double w = omega.value_or(dist.smoothness().omega);
  const double lam = lambda.value_or(dist.smoothness().lambda);
  Rng rng(seed);

  SmoothnessReport report;
  report.pairs = num_pairs;
  for (std::size_t i = 0; i < num_pairs; ++i) {
    const double x0 = rng.uniform();
    const double x1 = rng.uniform();
    const double r = std::abs(x0 - x1);
    if (r == 0.0) continue;
    const double meas = dist.ball_measure(x0, r);
    const double lhs = std::abs(dist.eta(x0) - dist.eta(x1));
    const double scale = std::pow(meas, lam);
    if (lhs > w * scale + 1e-12) ++report.violations;
    if (scale > 0.0 && lhs / scale > report.max_ratio) {
      report.max_ratio = lhs / scale;
      report.worst_x0 = x0;
      report.worst_x1 = x1;
    }
  }
  return report;
}

MarginReport verify_margin(const SyntheticDistribution& dist,
                           const std::vector<double>& xi_grid) {
  MarginReport report;
  for (double xi : xi_grid) {
    if (!(xi > 0.0 && xi <= 0.5)) {
      throw std::invalid_argument("verify_margin: xi values must be in (0, 1/2]");
    }
    MarginReport::Row row;
    row.xi = xi;
    row.measure = dist.margin_set_measure(xi);
    row.bound = dist.margin().c_alpha * std::pow(xi, dist.margin().alpha);
    row.ok = row.measure <= row.bound + 1e-12;
    report.all_ok = report.all_ok && row.ok;
    report.rows.push_back(row);
  }
  return report;
}

double GaussianLogisticDistribution::eta(const Point& x) const {
  return 1.0 / (1.0 + std::exp(-slope * x.front()));
}

LabeledDataset GaussianLogisticDistribution::sample(std::size_t n,
                                                    Rng& rng) const {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  LabeledDataset data;
  data.points.reserve(n);
  data.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point p(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      // Box-Muller, cosine branch only: two draws per coordinate keeps the
      // stream layout independent of call pattern.
      const double u1 = rng.uniform();
      const double u2 = rng.uniform();
      p[d] = std::sqrt(-2.0 * std::log(1.0 - u1)) *
             std::cos(2.0 * 3.14159265358979323846 * u2);
    }
    const int y = rng.bernoulli(eta(p)) ? 1 : 0;
    data.points.push_back(std::move(p));
    data.labels.push_back(y);
  }
  return data;
}

}  // namespace noisyknn
