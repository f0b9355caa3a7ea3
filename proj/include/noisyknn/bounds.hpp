#pragma once

#include <cstddef>

namespace noisyknn {
namespace bounds {

// Parameter bundle for the finite-sample bounds. Natural logarithms
// throughout; bounds larger than 1 are returned as-is (valid but vacuous).
struct BoundParams {
  std::size_t n = 1;      // sample size
  std::size_t k = 1;      // neighbour count
  double delta = 0.1;     // confidence level, in (0, 1)
  double lambda = 1.0;    // smoothness exponent, > 0
  double omega = 1.0;     // smoothness constant, > 0
  double alpha = 0.0;     // margin exponent, >= 0
  double c_alpha = 1.0;   // margin constant, >= 1
  double p0 = 0.0;        // true noise rates; p0 + p1 < 1 where needed
  double p1 = 0.0;
};

// Tail bound for the marginal measure of the ball reaching the k-th nearest
// neighbour of a fixed centre: exp(-k * (zeta - log(1 + zeta))).
double ball_measure_tail(std::size_t k, double zeta);

// Variant for a ball centred at one of the data points; exponent uses k - 1.
double ball_measure_tail_data_centre(std::size_t k, double zeta);

// Pointwise regression error bound sqrt(log(3/delta) / (2k)) +
// omega * (2k/n)^lambda. Warns once outside k in [4 log(3/delta) + 1, n/2].
double pointwise_bound(const BoundParams& p);

// Extremum estimation bound sqrt(log(6n/delta) / (2k)) +
// 2 * omega * (2k/n)^lambda.
double max_bound(const BoundParams& p);

// Combined estimation error term sqrt(log(18n/delta) / k) +
// 2 * omega * (2k/n)^lambda, dominating both the pointwise and extremum
// errors at confidence delta.
double xi_error_term(std::size_t n, std::size_t k, double delta, double lambda,
                     double omega);

// Excess-risk bound of the robust classifier:
// c_alpha * (8 / (1 - p0 - p1))^(alpha+1) * xi^(alpha+1) + delta.
double risk_bound(const BoundParams& p);

// Theoretically balanced neighbour count
// ceil((log(18n/delta) / (2 omega^2))^(1/(2 lambda + 1)) *
//      n^(2 lambda / (2 lambda + 1))), clipped to [1, n]. Warns once when n
// is below 5 * (10 omega^2)^(1/(2 lambda)) * log(18n/delta).
std::size_t optimal_k(std::size_t n, double delta, double lambda,
                      double omega);

// Displayed closed form of xi at the balanced k:
// 4^(lambda+1) * omega^(1/(2 lambda+1)) * (log(18n/delta)/n)^(lambda/(2
// lambda+1)). Upper-bounds xi_error_term(n, optimal_k(n), ...) and shares its
// rate in n.
double xi_at_optimal_k_closed_form(std::size_t n, double delta, double lambda,
                                   double omega);

// Ratio correction error bound 8 * max(eta_err, p0_err, p1_err) /
// (1 - p0 - p1); preconditions p0 + p1 < 1 and rate errors <=
// (1 - p0 - p1) / 4 (inclusive).
double ratio_correction_bound(double eta_err, double p0_err, double p1_err, double p0,
                    double p1);

// The validity window for k at confidence delta: [4 log(c/delta) + 1, n/2].
struct KWindow {
  double lo = 1.0;
  double hi = 0.0;
  bool contains(std::size_t k) const {
    return static_cast<double>(k) >= lo && static_cast<double>(k) <= hi;
  }
};

KWindow k_window(std::size_t n, double delta, double log_numerator = 3.0);

}  // namespace bounds
}  // namespace noisyknn
