#include "noisyknn/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>

namespace noisyknn {
namespace bounds {
namespace {

// Non-fatal validity-window diagnostics, printed to stderr at most once per
// call site.
void warn_once(const std::string& site, const std::string& message) {
  static std::mutex mutex;
  static std::set<std::string> seen;
  std::lock_guard<std::mutex> lock(mutex);
  if (seen.insert(site).second) {
    std::fprintf(stderr, "noisyknn: warning: %s\n", message.c_str());
  }
}

void check_basic(const BoundParams& p, bool need_rates) {
  if (p.n < 1 || p.k < 1 || p.k > p.n) {
    throw std::invalid_argument("bounds: need 1 <= k <= n");
  }
  if (!(p.delta > 0.0 && p.delta < 1.0)) {
    throw std::invalid_argument("bounds: delta must be in (0, 1)");
  }
  // omega = 0 (a constant regression function) degenerates to the pure
  // variance term and is allowed in the evaluators.
  if (!(p.lambda > 0.0) || !(p.omega >= 0.0)) {
    throw std::invalid_argument(
        "bounds: need lambda > 0 and omega >= 0");
  }
  if (p.alpha < 0.0 || p.c_alpha < 1.0) {
    throw std::invalid_argument("bounds: need alpha >= 0 and c_alpha >= 1");
  }
  if (need_rates) {
    if (p.p0 < 0.0 || p.p1 < 0.0 || p.p0 + p.p1 >= 1.0) {
      throw std::invalid_argument("bounds: need p0, p1 >= 0 and p0 + p1 < 1");
    }
  }
}

void warn_k_window(const char* site, const BoundParams& p,
                   double log_numerator) {
  const KWindow w = k_window(p.n, p.delta, log_numerator);
  if (!w.contains(p.k)) {
    warn_once(site, std::string(site) + ": k=" + std::to_string(p.k) +
                        " outside the validity window [" +
                        std::to_string(w.lo) + ", " + std::to_string(w.hi) +
                        "]");
  }
}

double bias_term(const BoundParams& p) {
  return p.omega *
         std::pow(2.0 * static_cast<double>(p.k) / static_cast<double>(p.n),
                  p.lambda);
}

}  // namespace

double ball_measure_tail(std::size_t k, double zeta) {
  if (k < 1) throw std::invalid_argument("ball_measure_tail: k >= 1");
  if (zeta < 0.0) throw std::invalid_argument("ball_measure_tail: zeta >= 0");
  return std::exp(-static_cast<double>(k) * (zeta - std::log1p(zeta)));
}

double ball_measure_tail_data_centre(std::size_t k, double zeta) {
  if (k < 1) throw std::invalid_argument("ball_measure_tail: k >= 1");
  if (zeta < 0.0) throw std::invalid_argument("ball_measure_tail: zeta >= 0");
  return std::exp(-static_cast<double>(k - 1) * (zeta - std::log1p(zeta)));
}

double pointwise_bound(const BoundParams& p) {
  check_basic(p, /*need_rates=*/false);
  warn_k_window("pointwise_bound", p, 3.0);
  const double variance =
      std::sqrt(std::log(3.0 / p.delta) / (2.0 * static_cast<double>(p.k)));
  return variance + bias_term(p);
}

double max_bound(const BoundParams& p) {
  check_basic(p, /*need_rates=*/false);
  warn_k_window("max_bound", p, 2.0);
  const double variance =
      std::sqrt(std::log(6.0 * static_cast<double>(p.n) / p.delta) /
                (2.0 * static_cast<double>(p.k)));
  return variance + 2.0 * bias_term(p);
}

double xi_error_term(std::size_t n, std::size_t k, double delta, double lambda,
                     double omega) {
  BoundParams p;
  p.n = n;
  p.k = k;
  p.delta = delta;
  p.lambda = lambda;
  p.omega = omega;
  check_basic(p, /*need_rates=*/false);
  const double variance =
      std::sqrt(std::log(18.0 * static_cast<double>(n) / delta) /
                static_cast<double>(k));
  return variance + 2.0 * bias_term(p);
}

double risk_bound(const BoundParams& p) {
  check_basic(p, /*need_rates=*/true);
  warn_k_window("risk_bound", p, 3.0);
  const double xi = xi_error_term(p.n, p.k, p.delta, p.lambda, p.omega);
  const double factor = 8.0 / (1.0 - p.p0 - p.p1);
  return p.c_alpha * std::pow(factor * xi, p.alpha + 1.0) + p.delta;
}

std::size_t optimal_k(std::size_t n, double delta, double lambda,
                      double omega) {
  BoundParams p;
  p.n = n;
  p.delta = delta;
  p.lambda = lambda;
  p.omega = omega;
  check_basic(p, /*need_rates=*/false);
  if (!(omega > 0.0)) {
    throw std::invalid_argument("optimal_k: omega must be positive");
  }
  const double log_term = std::log(18.0 * static_cast<double>(n) / delta);
  const double n_floor =
      5.0 * std::pow(10.0 * omega * omega, 1.0 / (2.0 * lambda)) * log_term;
  if (static_cast<double>(n) < n_floor) {
    warn_once("optimal_k",
              "optimal_k: n=" + std::to_string(n) +
                  " below the sample-size requirement n >= " +
                  std::to_string(n_floor));
  }
  const double exponent = 1.0 / (2.0 * lambda + 1.0);
  const double value = std::pow(log_term / (2.0 * omega * omega), exponent) *
                       std::pow(static_cast<double>(n), 2.0 * lambda * exponent);
  const double clipped =
      std::min(std::max(std::ceil(value), 1.0), static_cast<double>(n));
  return static_cast<std::size_t>(clipped);
}

double xi_at_optimal_k_closed_form(std::size_t n, double delta, double lambda,
                                   double omega) {
  BoundParams p;
  p.n = n;
  p.delta = delta;
  p.lambda = lambda;
  p.omega = omega;
  check_basic(p, /*need_rates=*/false);
  const double log_term = std::log(18.0 * static_cast<double>(n) / delta);
  return std::pow(4.0, lambda + 1.0) *
         std::pow(omega, 1.0 / (2.0 * lambda + 1.0)) *
         std::pow(log_term / static_cast<double>(n),
                  lambda / (2.0 * lambda + 1.0));
}

double ratio_correction_bound(double eta_err, double p0_err, double p1_err, double p0,
                    double p1) {
  if (eta_err < 0.0 || p0_err < 0.0 || p1_err < 0.0) {
    throw std::invalid_argument("ratio_correction_bound: errors must be >= 0");
  }
  const double denom = 1.0 - p0 - p1;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("ratio_correction_bound: requires p0 + p1 < 1");
  }
  if (std::max(p0_err, p1_err) > denom / 4.0) {
    throw std::invalid_argument(
        "ratio_correction_bound: rate errors must be <= (1 - p0 - p1) / 4");
  }
  return 8.0 * std::max(eta_err, std::max(p0_err, p1_err)) / denom;
}

KWindow k_window(std::size_t n, double delta, double log_numerator) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("k_window: delta must be in (0, 1)");
  }
  KWindow w;
  w.lo = 4.0 * std::log(log_numerator / delta) + 1.0;
  w.hi = static_cast<double>(n) / 2.0;
  return w;
}

}  // namespace bounds
}  // namespace noisyknn
