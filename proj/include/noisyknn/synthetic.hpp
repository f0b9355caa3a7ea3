#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "noisyknn/rng.hpp"
#include "noisyknn/types.hpp"

namespace noisyknn {

// Continuous piecewise-linear function on [0, 1] given by breakpoints and
// values; breakpoints strictly increase and span the full interval.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double x) const;

  const std::vector<double>& breakpoints() const { return xs_; }
  const std::vector<double>& values() const { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

struct SmoothnessParams {
  double lambda = 1.0;  // exponent
  double omega = 1.0;   // constant
};

struct MarginParams {
  double alpha = 0.0;    // exponent
  double c_alpha = 1.0;  // constant
};

// A distribution on [0, 1] x {0, 1} with uniform marginal and a known
// piecewise-linear regression function, carrying its declared smoothness and
// margin constants. Every derived quantity (ball measures, margin sets,
// excess risks) is computable in closed form, which is what makes the exact
// oracles in the test and experiment layers possible.
class SyntheticDistribution {
 public:
  SyntheticDistribution(PiecewiseLinear eta, SmoothnessParams smoothness,
                        MarginParams margin);

  double eta(double x) const { return eta_(x); }

  // Bayes classifier 1{eta(x) >= 1/2}, boundary inclusive.
  int bayes(double x) const { return eta_(x) >= 0.5 ? 1 : 0; }

  // i.i.d. clean sample: X uniform, Y ~ Bernoulli(eta(X)). Consumes exactly
  // two draws per point (x first, then the label).
  LabeledDataset sample(std::size_t n, Rng& rng) const;
  LabeledDataset sample(std::size_t n, std::uint64_t seed) const;

  // Distribution whose regression function is the corrupted
  // (1 - p0 - p1) * eta + p0; smoothness constant shrinks accordingly.
  SyntheticDistribution corrupted(const NoiseRates& rates) const;

  // Marginal measure of the ball B_r(x); the uniform marginal makes this the
  // length of (x - r, x + r) intersected with [0, 1].
  double ball_measure(double x, double r) const;

  // Exact integrals over [a, b] (breakpoint-aware Simpson, exact on the
  // linear pieces).
  double integral_eta(double a, double b) const;
  double abs_margin_integral(double a, double b) const;  // |eta - 1/2|
  // |eta - 1/2| restricted to where the Bayes label differs from `decision`.
  double disagreement_integral(double a, double b, int decision) const;

  // Analytic measure of {x : 0 < |eta(x) - 1/2| < xi}.
  double margin_set_measure(double xi) const;

  const PiecewiseLinear& regression() const { return eta_; }
  const SmoothnessParams& smoothness() const { return smoothness_; }
  const MarginParams& margin() const { return margin_; }

 private:
  PiecewiseLinear eta_;
  SmoothnessParams smoothness_;
  MarginParams margin_;
};

// The three-piece inconsistency example: slope 3/2, a flat middle plateau at
// m = (2 - 3*p0 - p1) / (4 * (1 - p0 - p1)), slope 3/2 again. Requires
// p0, p1 in (0, 1/2). With p0 == p1 the plateau sits exactly at 1/2 and the
// clean/corrupted decision boundaries coincide.
SyntheticDistribution make_plateau_example(double p0, double p1);

SyntheticDistribution make_constant(double value);
SyntheticDistribution make_ramp();

// Excess risk over the Bayes rule for an arbitrary pointwise classifier:
// locates the classifier's decision boundaries by bisection between sign
// changes on a dense scan (>= 1e5 nodes), then integrates |eta - 1/2| over
// the disagreement region exactly. `quad_tol` bounds the absolute error.
double excess_risk(const SyntheticDistribution& dist,
                   const std::function<int(double)>& classifier,
                   double quad_tol = 1e-6);

// Excess risk for a classifier that is constant on the cells of a known
// partition: decisions[i] holds on [boundaries[i-1], boundaries[i]) with
// boundaries strictly inside (0, 1). Exact.
double excess_risk_piecewise(const SyntheticDistribution& dist,
                             const std::vector<double>& boundaries,
                             const std::vector<int>& decisions);

// Where the clean and corrupted regression functions commit to opposite
// sides of 1/2, each by margin at least theta (theta = 0 uses the strict
// sign condition). Computed analytically from the piecewise-linear form.
struct DisagreementSet {
  double theta = 0.0;
  double measure = 0.0;
  std::vector<std::pair<double, double>> intervals;
};

DisagreementSet disagreement_set(const SyntheticDistribution& dist,
                                 const NoiseRates& rates, double theta);

// Random-pair falsification check of the measure-smoothness inequality
// |eta(x0) - eta(x1)| <= omega * mu(B_{|x0-x1|}(x0))^lambda. Not a proof.
struct SmoothnessReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // max |d_eta| / mu(ball)^lambda, the omega needed
  double worst_x0 = 0.0;
  double worst_x1 = 0.0;
};

SmoothnessReport verify_smoothness(const SyntheticDistribution& dist,
                                   std::size_t num_pairs, std::uint64_t seed,
                                   std::optional<double> omega = {},
                                   std::optional<double> lambda = {});

// Analytic check of the margin condition mu({0 < |eta - 1/2| < xi}) <=
// c_alpha * xi^alpha on a grid of xi values in (0, 1/2].
struct MarginReport {
  struct Row {
    double xi = 0.0;
    double measure = 0.0;
    double bound = 0.0;
    bool ok = false;
  };
  std::vector<Row> rows;
  bool all_ok = true;
};

MarginReport verify_margin(const SyntheticDistribution& dist,
                           const std::vector<double>& xi_grid);

// Sampling-only extra for d > 1 smoke tests: standard normal features,
// eta(x) = logistic(slope * x[0]). No exact-risk support.
struct GaussianLogisticDistribution {
  std::size_t dim = 2;
  double slope = 3.0;

  double eta(const Point& x) const;
  LabeledDataset sample(std::size_t n, Rng& rng) const;
};

}  // namespace noisyknn
