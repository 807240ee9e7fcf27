#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nbfgs/analysis.hpp"
#include "nbfgs/bfgs.hpp"

namespace nbfgs {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lengthening parameter used when l resolves to zero (noiseless gradients).
inline constexpr double kNoiselessLength = 1e-8;

struct ExperimentConfig {
  // problem
  std::size_t dimension = 4;
  std::vector<double> eigenvalues{1e-2, 1.0, 1e2, 1e4};
  std::optional<std::uint64_t> rotation_seed;
  // noise
  double eps_f = 1.0;
  double eps_g = 1.0;
  std::uint64_t seed = 1;
  // algorithm
  double c1 = 0.01;
  double c2 = 0.5;
  std::optional<double> l;  // explicit lengthening parameter
  double l_factor = 4.0;    // l = l_factor * eps_g / m when l is unset
  double grad_tol = 1e-5;
  int max_iters = 60;
  int max_consecutive_failures = 30;
  int max_bisections = 64;
  double q = 0.5;  // fraction used for the good-iterate constants
  // experiment
  int runs = 20;
  std::vector<double> x0{1e5};  // a single value means value * ones(d)
  std::string out = "nbfgs";

  double strong_convexity() const;
  double lipschitz() const;
  double resolved_l() const;
  Vector resolved_x0() const;
  AlgoConfig algo_config() const;

  // Throws ConfigError on inconsistent or out-of-range values.
  void validate() const;
};

// Flat "key = value" text, '#' starts a comment. Lists are comma separated.
// Unset keys keep their defaults. Throws ConfigError.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

struct RunSummary {
  int run_id = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::iter_limit;
  int iterations = 0;
  std::optional<double> min_gap;
  double final_gap = 0.0;
  double final_grad_true_norm = 0.0;
  double final_cond_metric = 0.0;
  std::optional<int> first_lengthening;
  int lengthening_count = 0;
  int line_search_failures = 0;
  std::uint64_t f_evals = 0;
  std::uint64_t g_evals = 0;
  bool accounting_consistent = false;
  int envelope_violations = 0;
  bool good_iterate_bound_holds = true;
  std::optional<analysis::Quartiles> cos_theta;
};

struct ExperimentSummary {
  std::vector<RunSummary> runs;
  analysis::TheoryConstants theory;
  double l = 0.0;
  std::optional<double> median_final_gap;
  std::optional<double> max_min_gap;
  std::optional<int> earliest_first_lengthening;
  std::optional<analysis::Quartiles> cos_theta;
};

struct RunOutput {
  std::uint64_t seed = 0;
  RunResult result;
};

struct ExperimentResult {
  std::vector<RunOutput> runs;
  ExperimentSummary summary;
};

// Run i uses noise seed config.seed + i. Deterministic in the config.
ExperimentResult run_experiment(const ExperimentConfig& config);

ExperimentSummary summarize(const ExperimentConfig& config, const std::vector<RunOutput>& runs);

inline constexpr std::string_view kCsvHeader =
    "run_id,iter,f_noisy,phi_true,gap,grad_true_norm,grad_noisy_norm,cos_theta,"
    "cos_theta_tilde,alpha,ls_trials,ls_failed,lengthened,cond_metric";

void write_csv(std::ostream& os, const std::vector<IterateRecord>& records);
void write_csv(const std::vector<IterateRecord>& records, const std::filesystem::path& path);
// Parses the CSV columns back; fields outside the schema stay default.
std::vector<IterateRecord> read_csv(std::istream& is);

std::string summary_json(const ExperimentSummary& summary);
std::string summary_text(const ExperimentSummary& summary);

// Writes <prefix>_run_NN.csv per run, <prefix>_all.csv and
// <prefix>_summary.json. Returns the paths written.
std::vector<std::filesystem::path> write_outputs(const ExperimentResult& result,
                                                 const std::string& prefix);

}  // namespace nbfgs
