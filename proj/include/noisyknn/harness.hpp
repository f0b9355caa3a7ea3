#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisyknn/synthetic.hpp"
#include "noisyknn/types.hpp"

namespace noisyknn {
namespace harness {

enum class KPolicy { kFixed, kBalanced, kCrossValidated };

std::string to_string(KPolicy policy);
KPolicy parse_k_policy(const std::string& s);

// One configuration drives every experiment; fields irrelevant to a given
// experiment are ignored. For the built-in three-piece example the channel
// rates double as the shape parameters, matching its construction.
struct ExperimentConfig {
  std::string dist_kind = "plateau";  // plateau | constant | ramp
  double dist_value = 0.5;                  // constant only
  double p0 = 0.1;                          // channel rates
  double p1 = 0.3;
  std::vector<std::size_t> n_grid = {2000};
  KPolicy k_policy = KPolicy::kBalanced;
  std::size_t k = 0;  // fixed policy
  std::size_t replicates = 1;
  double delta = 0.1;
  double zeta = 0.2;    // ball experiment
  double theta = 0.04;  // disagreement margin in the inconsistency demo
  double probe_x = 0.5;
  std::vector<std::size_t> k_grid;  // cross-validated policy; empty = auto
  std::size_t cv_folds = 5;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0 = hardware concurrency

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// Records are stored as doubles (counts are exact well below 2^53) and
// written with round-trip formatting. Result files contain no timing or
// host-dependent data: a rerun with the same config and seed is
// byte-identical regardless of the worker count.
struct RecordTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  std::string experiment;
  RecordTable records;
  nlohmann::json summary;
  bool checks_passed = true;
};

// Writes <prefix>_records.csv and <prefix>_summary.json.
void write_result_files(const ExperimentResult& result,
                        const std::string& prefix);

SyntheticDistribution make_distribution(const ExperimentConfig& config);

// Tail frequency of the k-th-neighbour ball measure exceeding
// (1 + zeta) * k / n, for a fixed centre and for a data-point centre,
// against their respective tail bounds.
ExperimentResult run_ball_measure_experiment(const ExperimentConfig& config);

// Pointwise estimation error of the corrupted regression estimate at a
// fixed probe and at the first training point, against the pointwise bound.
ExperimentResult run_pointwise_experiment(const ExperimentConfig& config);

// Extremum estimation error against the extremum bound; the corrupted
// regression function's extrema are known analytically.
ExperimentResult run_max_experiment(const ExperimentConfig& config);

// Excess-risk decay of the robust classifier over an n grid: rate estimates,
// exact clean-test excess risks (robust, standard, known-rates oracle),
// log-log slope, and per-replicate comparison with the risk bound.
ExperimentResult run_rate_experiment(const ExperimentConfig& config);

// Trains the standard and robust classifiers on corrupted data and evaluates
// exact excess risk against the clean distribution: the standard classifier
// stalls at the plateau disagreement while the robust one converges. Also
// verifies the two-distribution excess-risk floor
// clean + corrupted >= theta * mu(A_theta) for every trained classifier.
ExperimentResult run_inconsistency_demo(const ExperimentConfig& config);

// Grid cross-validation for k: picks the grid value minimizing the mean
// 0-1 validation error of the robust classifier, refit on each fold's
// training part and scored against the held-out corrupted labels. Ties go to
// the smallest k.
std::size_t cross_validate_k(const RegressionSample& sample,
                             const std::vector<std::size_t>& k_grid,
                             std::size_t folds, std::uint64_t seed);

// Geometric grid {5, ..., n/2} used when the cross-validated policy has no
// explicit grid.
std::vector<std::size_t> default_k_grid(std::size_t n);

}  // namespace harness
}  // namespace noisyknn
