#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "noisyknn/bounds.hpp"
#include "noisyknn/csv.hpp"
#include "noisyknn/harness.hpp"
#include "noisyknn/knn_core.hpp"
#include "noisyknn/noise_model.hpp"
#include "noisyknn/rng.hpp"
#include "noisyknn/synthetic.hpp"

namespace {

using nlohmann::json;
using namespace noisyknn;

// Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O error.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

void write_json_output(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write " + out_path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + out_path);
}

struct GenerateArgs {
  std::string dist = "plateau";
  double p0 = 0.1;  // channel rates; may be zero for a noiseless baseline
  double p1 = 0.3;
  double shape_p0 = 0.1;  // plateau shape of the paper example
  double shape_p1 = 0.3;
  bool shape_given = false;
  double constant_value = 0.5;
  std::size_t dim = 2;
  double slope = 3.0;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;
  bool keep_clean = false;
};

int cmd_generate(const GenerateArgs& a) {
  Rng rng(a.seed);
  LabeledDataset clean;
  if (a.dist == "gaussian") {
    GaussianLogisticDistribution dist;
    dist.dim = a.dim;
    dist.slope = a.slope;
    clean = dist.sample(a.n, rng);
  } else {
    harness::ExperimentConfig cfg;
    cfg.dist_kind = a.dist;
    cfg.dist_value = a.constant_value;
    // The example's shape defaults to the channel rates (the matched-noise
    // setting) but stays at its default when the channel is noiseless.
    cfg.p0 = a.shape_p0;
    cfg.p1 = a.shape_p1;
    if (!a.shape_given && a.p0 > 0.0 && a.p0 < 0.5 && a.p1 > 0.0 &&
        a.p1 < 0.5) {
      cfg.p0 = a.p0;
      cfg.p1 = a.p1;
    }
    clean = harness::make_distribution(cfg).sample(a.n, rng);
  }

  NoiseRates rates;
  rates.p0 = a.p0;
  rates.p1 = a.p1;
  LabeledDataset noisy = clean;
  noisy.labels = corrupt_labels(clean.labels, rates, rng);

  write_dataset_csv(a.out, noisy, a.keep_clean ? &clean.labels : nullptr);
  std::cout << "wrote " << a.out << " (n=" << a.n << ", seed=" << a.seed
            << ")\n";
  return kExitOk;
}

struct CorruptArgs {
  std::string in;
  std::string out;
  double p0 = 0.1;
  double p1 = 0.3;
  std::uint64_t seed = 0;
  bool keep_clean = false;
};

int cmd_corrupt(const CorruptArgs& a) {
  const DatasetFile file = read_dataset_csv(a.in);
  NoiseRates rates;
  rates.p0 = a.p0;
  rates.p1 = a.p1;
  const NoiseChannel channel(rates, a.seed);
  LabeledDataset noisy = file.data;
  noisy.labels = corrupt_labels(file.data.labels, channel);
  write_dataset_csv(a.out, noisy,
                    a.keep_clean ? &file.data.labels : nullptr);
  std::cout << "wrote " << a.out << " (seed=" << a.seed << ")\n";
  return kExitOk;
}

struct FitPredictArgs {
  std::string train;
  std::string queries;
  std::string out;
  std::string summary_path;
  std::size_t k = 0;
  std::string k_policy;  // empty (fixed), "optimal", or "cv"
  double delta = 0.1;
  double lambda = 1.0;
  double omega = 3.0;
  std::vector<std::size_t> k_grid;
  std::size_t folds = 5;
  bool standard = false;
  std::vector<double> known_rates;
  bool brute_force = false;
  std::uint64_t seed = 0;
};

int cmd_fit_predict(const FitPredictArgs& a) {
  const DatasetFile train_file = read_dataset_csv(a.train);
  const RegressionSample sample = to_regression_sample(train_file.data);
  const std::size_t n = sample.size();

  std::size_t k = a.k;
  if (a.k_policy == "optimal") {
    k = bounds::optimal_k(n, a.delta, a.lambda, a.omega);
  } else if (a.k_policy == "cv") {
    const auto grid =
        a.k_grid.empty() ? harness::default_k_grid(n) : a.k_grid;
    k = harness::cross_validate_k(sample, grid, a.folds, a.seed);
  } else if (k == 0) {
    throw std::invalid_argument("fit-predict: provide --k or --k-policy");
  }
  const bounds::KWindow window = bounds::k_window(n, a.delta);
  if (!window.contains(k)) {
    std::fprintf(stderr,
                 "noisyknn: warning: k=%zu outside the validity window "
                 "[%.1f, %.1f]\n",
                 k, window.lo, window.hi);
  }

  const IndexBackend backend =
      a.brute_force ? IndexBackend::kBruteForce : IndexBackend::kAuto;
  std::optional<RobustKnnModel> model;
  if (a.standard) {
    model = RobustKnnModel::fit_with_rates(sample, k, NoiseRates{},
                                           Metric::euclidean(), backend);
  } else if (!a.known_rates.empty()) {
    NoiseRates rates;
    rates.p0 = a.known_rates.at(0);
    rates.p1 = a.known_rates.at(1);
    model = RobustKnnModel::fit_with_rates(sample, k, rates,
                                           Metric::euclidean(), backend);
  } else {
    model = RobustKnnModel::fit(sample, k, Metric::euclidean(), backend);
  }

  const std::vector<Point> queries = read_points_csv(a.queries);
  std::ofstream out(a.out);
  if (!out) throw IoError("cannot write " + a.out);
  out << "label,eta_corr_hat\n";
  for (const Point& q : queries) {
    const double eta_hat = model->predict(q);
    const int label = eta_hat >= model->threshold() ? 1 : 0;
    out << label << "," << format_double(eta_hat) << "\n";
  }
  if (!out) throw IoError("write failed for " + a.out);

  const RobustKnnModel::Summary s = model->summary();
  json summary;
  summary["n"] = s.n;
  summary["dim"] = s.dim;
  summary["k"] = s.k;
  summary["p0_hat"] = s.p0_hat;
  summary["p1_hat"] = s.p1_hat;
  summary["threshold"] = s.threshold;
  summary["degenerate"] = s.degenerate;
  summary["standard"] = a.standard;
  summary["rates_estimated"] = !a.standard && a.known_rates.empty();
  summary["seed"] = a.seed;
  write_json_output(summary, a.summary_path);
  return kExitOk;
}

struct EstimateNoiseArgs {
  std::string train;
  std::size_t k = 0;
  std::string k_policy;
  double delta = 0.1;
  double lambda = 1.0;
  double omega = 3.0;
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_estimate_noise(const EstimateNoiseArgs& a) {
  const DatasetFile train_file = read_dataset_csv(a.train);
  const RegressionSample sample = to_regression_sample(train_file.data);
  std::size_t k = a.k;
  if (a.k_policy == "optimal") {
    k = bounds::optimal_k(sample.size(), a.delta, a.lambda, a.omega);
  } else if (k == 0) {
    throw std::invalid_argument("estimate-noise: provide --k or --k-policy");
  }
  const NoiseRates rates =
      estimate_noise_rates(sample, k, Metric::euclidean());
  json out;
  out["k"] = k;
  out["p0_hat"] = rates.p0;
  out["p1_hat"] = rates.p1;
  out["degenerate"] = rates.degenerate;
  out["seed"] = a.seed;
  write_json_output(out, a.out);
  return kExitOk;
}

struct EvaluateArgs {
  std::string predictions;
  std::string truth;
  std::string column = "label";
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const CsvTable preds = read_csv(a.predictions);
  const CsvTable truth = read_csv(a.truth);
  const auto pred_col = preds.column("label");
  const auto truth_col = truth.column(a.column);
  if (!pred_col) throw IoError("predictions file lacks a 'label' column");
  if (!truth_col) throw IoError("truth file lacks a '" + a.column + "' column");
  if (preds.rows.size() != truth.rows.size()) {
    throw IoError("predictions and truth have different row counts");
  }
  std::size_t errors = 0;
  for (std::size_t i = 0; i < preds.rows.size(); ++i) {
    if (preds.rows[i][*pred_col] != truth.rows[i][*truth_col]) ++errors;
  }
  json out;
  out["n"] = preds.rows.size();
  out["errors"] = errors;
  out["error_rate"] =
      static_cast<double>(errors) / static_cast<double>(preds.rows.size());
  write_json_output(out, a.out);
  return kExitOk;
}

struct BoundsArgs {
  std::size_t n = 10000;
  std::size_t k = 0;  // 0 = use optimal_k
  double delta = 0.1;
  double lambda = 1.0;
  double omega = 3.0;
  double alpha = 0.0;
  double c_alpha = 1.0;
  double p0 = 0.1;
  double p1 = 0.3;
  double zeta = 0.2;
  bool as_json = false;
};

int cmd_bounds(const BoundsArgs& a) {
  bounds::BoundParams p;
  p.n = a.n;
  p.delta = a.delta;
  p.lambda = a.lambda;
  p.omega = a.omega;
  p.alpha = a.alpha;
  p.c_alpha = a.c_alpha;
  p.p0 = a.p0;
  p.p1 = a.p1;
  const std::size_t k_opt = bounds::optimal_k(a.n, a.delta, a.lambda, a.omega);
  p.k = a.k == 0 ? k_opt : a.k;

  json out;
  out["n"] = p.n;
  out["k"] = p.k;
  out["optimal_k"] = k_opt;
  out["pointwise_bound"] = bounds::pointwise_bound(p);
  out["max_bound"] = bounds::max_bound(p);
  out["xi_error_term"] =
      bounds::xi_error_term(p.n, p.k, p.delta, p.lambda, p.omega);
  out["risk_bound"] = bounds::risk_bound(p);
  out["ball_tail_fixed"] = bounds::ball_measure_tail(p.k, a.zeta);
  out["ball_tail_data_centre"] =
      bounds::ball_measure_tail_data_centre(p.k, a.zeta);

  if (a.as_json) {
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }
  std::printf("%-24s %s\n", "quantity", "value");
  for (const auto& [key, value] : out.items()) {
    if (value.is_number_unsigned()) {
      std::printf("%-24s %llu\n", key.c_str(),
                  static_cast<unsigned long long>(value.get<std::size_t>()));
    } else {
      std::printf("%-24s %.6g\n", key.c_str(), value.get<double>());
    }
  }
  return kExitOk;
}

struct ExperimentArgs {
  std::string type;
  std::string config_path;
  std::string out_prefix;
  bool check = false;
  // Overrides; negative / empty = keep config value.
  std::optional<std::size_t> n;
  std::vector<std::size_t> n_grid;
  std::optional<std::size_t> k;
  std::string k_policy;
  std::optional<std::size_t> replicates;
  std::optional<double> delta;
  std::optional<double> zeta;
  std::optional<double> theta;
  std::optional<double> p0;
  std::optional<double> p1;
  std::string dist;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

int cmd_experiment(const ExperimentArgs& a) {
  harness::ExperimentConfig cfg;
  bool config_has_seed = false;
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw IoError("cannot open " + a.config_path);
    json j;
    in >> j;
    cfg = harness::ExperimentConfig::from_json(j);
    config_has_seed = j.contains("seed");
  }
  // Seed precedence: --seed flag, then the config file, then $NOISYKNN_SEED.
  if (!a.seed && !config_has_seed) {
    if (const char* env = std::getenv("NOISYKNN_SEED")) {
      cfg.seed = std::strtoull(env, nullptr, 10);
    }
  }
  if (!a.n_grid.empty()) cfg.n_grid = a.n_grid;
  if (a.n) cfg.n_grid = {*a.n};
  if (a.k) {
    cfg.k = *a.k;
    cfg.k_policy = harness::KPolicy::kFixed;
  }
  if (!a.k_policy.empty()) cfg.k_policy = harness::parse_k_policy(a.k_policy);
  if (a.replicates) cfg.replicates = *a.replicates;
  if (a.delta) cfg.delta = *a.delta;
  if (a.zeta) cfg.zeta = *a.zeta;
  if (a.theta) cfg.theta = *a.theta;
  if (a.p0) cfg.p0 = *a.p0;
  if (a.p1) cfg.p1 = *a.p1;
  if (!a.dist.empty()) cfg.dist_kind = a.dist;
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;

  const auto start = std::chrono::steady_clock::now();
  harness::ExperimentResult result;
  if (a.type == "ball") {
    result = harness::run_ball_measure_experiment(cfg);
  } else if (a.type == "pointwise") {
    result = harness::run_pointwise_experiment(cfg);
  } else if (a.type == "max") {
    result = harness::run_max_experiment(cfg);
  } else if (a.type == "rate") {
    result = harness::run_rate_experiment(cfg);
  } else if (a.type == "inconsistency") {
    result = harness::run_inconsistency_demo(cfg);
  } else {
    throw std::invalid_argument("unknown experiment '" + a.type + "'");
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  const std::string prefix =
      a.out_prefix.empty() ? "experiment_" + a.type : a.out_prefix;
  harness::write_result_files(result, prefix);
  std::fprintf(stderr, "noisyknn: %s experiment finished in %.2fs\n",
               a.type.c_str(), elapsed);
  std::cout << "seed: " << cfg.seed << "\n";
  std::cout << "records: " << prefix << "_records.csv\n";
  std::cout << "summary: " << prefix << "_summary.json\n";
  std::cout << "checks: " << result.summary.at("checks").dump() << "\n";

  if (a.check && !result.checks_passed) return kExitCheckFailed;
  return kExitOk;
}

struct CvArgs {
  std::string train;
  std::vector<std::size_t> k_grid;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_cv_k(const CvArgs& a) {
  const DatasetFile train_file = read_dataset_csv(a.train);
  const RegressionSample sample = to_regression_sample(train_file.data);
  const auto grid =
      a.k_grid.empty() ? harness::default_k_grid(sample.size()) : a.k_grid;
  const std::size_t k =
      harness::cross_validate_k(sample, grid, a.folds, a.seed);
  json out;
  out["selected_k"] = k;
  out["folds"] = a.folds;
  out["seed"] = a.seed;
  write_json_output(out, a.out);
  return kExitOk;
}

void add_seed_option(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "RNG seed (default: $NOISYKNN_SEED or 0)")
      ->envname("NOISYKNN_SEED");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "noisyknn: kNN classification under unknown class-conditional label "
      "noise"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand(
      "generate", "Sample a synthetic dataset and pass it through the "
                  "label-noise channel");
  generate->add_option("--dist", gen.dist,
                       "plateau | constant | ramp | gaussian");
  generate->add_option("--p0", gen.p0, "flip probability for class 0");
  generate->add_option("--p1", gen.p1, "flip probability for class 1");
  auto* shape0 = generate->add_option(
      "--shape-p0", gen.shape_p0,
      "plateau plateau parameter (default: the channel rates)");
  generate->add_option("--shape-p1", gen.shape_p1,
                       "plateau plateau parameter");
  shape0->each([&gen](const std::string&) { gen.shape_given = true; });
  generate->add_option("--constant-value", gen.constant_value,
                       "eta value for --dist constant");
  generate->add_option("--dim", gen.dim, "dimension for --dist gaussian");
  generate->add_option("--slope", gen.slope, "slope for --dist gaussian");
  generate->add_option("--n", gen.n, "sample size")->required();
  generate->add_option("--out", gen.out, "output CSV")->required();
  generate->add_flag("--keep-clean", gen.keep_clean,
                     "include a clean_label column");
  add_seed_option(generate, gen.seed);

  CorruptArgs cor;
  auto* corrupt = app.add_subcommand(
      "corrupt", "Apply the label-noise channel to an existing dataset");
  corrupt->add_option("--in", cor.in, "input CSV")->required();
  corrupt->add_option("--out", cor.out, "output CSV")->required();
  corrupt->add_option("--p0", cor.p0, "flip probability for class 0");
  corrupt->add_option("--p1", cor.p1, "flip probability for class 1");
  corrupt->add_flag("--keep-clean", cor.keep_clean,
                    "include the input labels as clean_label");
  add_seed_option(corrupt, cor.seed);

  FitPredictArgs fit;
  auto* fit_predict = app.add_subcommand(
      "fit-predict", "Fit the robust kNN classifier and label query points");
  fit_predict->add_option("--train", fit.train, "training CSV")->required();
  fit_predict->add_option("--queries", fit.queries, "query CSV")->required();
  fit_predict->add_option("--out", fit.out, "predictions CSV")->required();
  fit_predict->add_option("--summary", fit.summary_path,
                          "model summary JSON (default: stdout)");
  fit_predict->add_option("--k", fit.k, "neighbour count");
  fit_predict->add_option("--k-policy", fit.k_policy, "optimal | cv");
  fit_predict->add_option("--delta", fit.delta, "confidence for --k-policy");
  fit_predict->add_option("--lambda", fit.lambda,
                          "smoothness exponent for --k-policy optimal");
  fit_predict->add_option("--omega", fit.omega,
                          "smoothness constant for --k-policy optimal");
  fit_predict->add_option("--k-grid", fit.k_grid, "cv grid")->delimiter(',');
  fit_predict->add_option("--folds", fit.folds, "cv folds");
  fit_predict->add_flag("--standard", fit.standard,
                        "standard kNN (threshold 1/2)");
  fit_predict
      ->add_option("--known-rates", fit.known_rates,
                   "skip estimation and use these rates (p0 p1)")
      ->expected(2);
  fit_predict->add_flag("--brute-force", fit.brute_force,
                        "disable the k-d tree");
  add_seed_option(fit_predict, fit.seed);

  EstimateNoiseArgs est;
  auto* estimate = app.add_subcommand(
      "estimate-noise", "Estimate the flip probabilities from corrupted data");
  estimate->add_option("--train", est.train, "training CSV")->required();
  estimate->add_option("--k", est.k, "neighbour count");
  estimate->add_option("--k-policy", est.k_policy, "optimal");
  estimate->add_option("--delta", est.delta, "confidence for --k-policy");
  estimate->add_option("--lambda", est.lambda, "smoothness exponent");
  estimate->add_option("--omega", est.omega, "smoothness constant");
  estimate->add_option("--out", est.out, "output JSON (default: stdout)");
  add_seed_option(estimate, est.seed);

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand(
      "evaluate", "0-1 error of a predictions file against labelled data");
  evaluate->add_option("--predictions", eval.predictions, "predictions CSV")
      ->required();
  evaluate->add_option("--truth", eval.truth, "labelled CSV")->required();
  evaluate->add_option("--column", eval.column,
                       "truth column (label or clean_label)");
  evaluate->add_option("--out", eval.out, "output JSON (default: stdout)");

  BoundsArgs bnd;
  auto* bounds_cmd = app.add_subcommand(
      "bounds", "Evaluate the finite-sample bounds for given parameters");
  bounds_cmd->add_option("--n", bnd.n, "sample size");
  bounds_cmd->add_option("--k", bnd.k, "neighbour count (default: optimal)");
  bounds_cmd->add_option("--delta", bnd.delta, "confidence level");
  bounds_cmd->add_option("--lambda", bnd.lambda, "smoothness exponent");
  bounds_cmd->add_option("--omega", bnd.omega, "smoothness constant");
  bounds_cmd->add_option("--alpha", bnd.alpha, "margin exponent");
  bounds_cmd->add_option("--c-alpha", bnd.c_alpha, "margin constant");
  bounds_cmd->add_option("--p0", bnd.p0, "noise rate for class 0");
  bounds_cmd->add_option("--p1", bnd.p1, "noise rate for class 1");
  bounds_cmd->add_option("--zeta", bnd.zeta, "ball-measure margin");
  bounds_cmd->add_flag("--json", bnd.as_json, "JSON output");

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand(
      "experiment", "Run a Monte Carlo experiment and write result files");
  experiment
      ->add_option("type", exp.type,
                   "ball | pointwise | max | rate | inconsistency")
      ->required();
  experiment->add_option("--config", exp.config_path, "config JSON file");
  experiment->add_option("--out", exp.out_prefix, "output file prefix");
  experiment->add_flag("--check", exp.check,
                       "exit with status 1 if any summary check fails");
  experiment->add_option("--n", exp.n, "single grid point n");
  experiment->add_option("--n-grid", exp.n_grid, "n grid")->delimiter(',');
  experiment->add_option("--k", exp.k, "fixed neighbour count");
  experiment->add_option("--k-policy", exp.k_policy,
                         "fixed | balanced | cross-validated");
  experiment->add_option("--reps", exp.replicates, "replicates per n");
  experiment->add_option("--delta", exp.delta, "confidence level");
  experiment->add_option("--zeta", exp.zeta, "ball-measure margin");
  experiment->add_option("--theta", exp.theta, "disagreement margin");
  experiment->add_option("--p0", exp.p0, "noise rate for class 0");
  experiment->add_option("--p1", exp.p1, "noise rate for class 1");
  experiment->add_option("--dist", exp.dist,
                         "plateau | constant | ramp");
  experiment->add_option("--workers", exp.workers, "worker threads");
  experiment->add_option("--seed", exp.seed,
                         "RNG seed (flag > config > $NOISYKNN_SEED)");

  CvArgs cv;
  auto* cv_k = app.add_subcommand(
      "cv-k", "Select k by grid cross-validation on corrupted data");
  cv_k->add_option("--train", cv.train, "training CSV")->required();
  cv_k->add_option("--k-grid", cv.k_grid, "candidate k values")
      ->delimiter(',');
  cv_k->add_option("--folds", cv.folds, "fold count");
  cv_k->add_option("--out", cv.out, "output JSON (default: stdout)");
  add_seed_option(cv_k, cv.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(generate)) return cmd_generate(gen);
    if (app.got_subcommand(corrupt)) return cmd_corrupt(cor);
    if (app.got_subcommand(fit_predict)) return cmd_fit_predict(fit);
    if (app.got_subcommand(estimate)) return cmd_estimate_noise(est);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(eval);
    if (app.got_subcommand(bounds_cmd)) return cmd_bounds(bnd);
    if (app.got_subcommand(experiment)) return cmd_experiment(exp);
    if (app.got_subcommand(cv_k)) return cmd_cv_k(cv);
  } catch (const IoError& e) {
    std::fprintf(stderr, "noisyknn: I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "noisyknn: usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "noisyknn: error: %s\n", e.what());
    return kExitCheckFailed;
  }
  return kExitUsage;
}
