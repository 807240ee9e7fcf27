#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "nbfgs/line_search.hpp"
#include "nbfgs/linalg.hpp"
#include "nbfgs/problems.hpp"

namespace nbfgs {

struct CurvaturePair {
  Vector s;
  Vector y;
  bool lengthened = false;
  int g_evals = 0;  // oracle gradient calls spent building the pair
};

struct BfgsState {
  Vector x;
  SymMatrix H;  // inverse Hessian approximation
  int iter = 0;
  int consecutive_failures = 0;
  // Noisy f(x) carried from the accepted line-search trial, so f(x_k) is
  // evaluated once per distinct iterate.
  std::optional<double> f;
};

struct AlgoConfig {
  double l = 1.0;  // lengthening parameter, > 0
  double grad_tol = 1e-5;
  int max_iters = 60;
  int max_consecutive_failures = 30;
  LineSearchParams line_search{};

  void validate() const;
};

enum class RunStatus { running, converged, stalled, iter_limit };
std::string_view to_string(RunStatus status);

/// One row of per-iteration instrumentation. Values describe iterate x_k and
/// the decisions taken there.
struct IterateRecord {
  int run_id = 0;
  int iter = 0;
  double f_noisy = 0.0;
  double phi_true = 0.0;
  double gap = 0.0;
  double grad_true_norm = 0.0;
  double grad_noisy_norm = 0.0;
  double cos_theta = 0.0;        // angle between -p_k and g(x_k)
  double cos_theta_tilde = 0.0;  // angle between -p_k and grad phi(x_k)
  double alpha = 0.0;
  int ls_trials = 0;
  bool ls_failed = false;
  bool lengthened = false;
  double cond_metric = 0.0;  // cond(H^{1/2} hess(x_k) H^{1/2})

  // Oracle accounting, not part of the CSV schema.
  int ls_g_evals = 0;
  int pair_g_evals = 0;
  double phi_next = 0.0;  // phi(x_{k+1})

  bool operator==(const IterateRecord&) const = default;
};

Vector compute_direction(const SymMatrix& H, const Vector& g);

// H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, rho = 1 / s^T y.
// Throws ContractError when s^T y <= 0.
SymMatrix bfgs_update(const SymMatrix& H, const CurvaturePair& pair);

// Uses s = alpha p when ||alpha p|| >= l (one fresh g at x + s, cached g_x),
// otherwise lengthens to s = l p / ||p|| with fresh g at both ends.
CurvaturePair build_pair(NoisyOracle& oracle, const Vector& x, const Vector& p, double alpha,
                         const Vector& g_x, double l);

// Instrumentation metric cond(H^{1/2} A H^{1/2}).
double hessian_fit_condition(const SymMatrix& H, const SymMatrix& hessian);

struct StepResult {
  BfgsState state;
  std::optional<IterateRecord> record;  // empty when the step terminated
  RunStatus status = RunStatus::running;
};

// One iteration. Evaluates g(x_k) and checks termination (converged, then
// stalled, then iteration limit) before doing anything else.
StepResult step(const BfgsState& state, NoisyOracle& oracle, const AlgoConfig& config);

struct RunResult {
  std::vector<IterateRecord> records;
  RunStatus status = RunStatus::iter_limit;
  BfgsState final_state;
  double final_phi = 0.0;
  double final_gap = 0.0;
  double final_grad_true_norm = 0.0;
  double final_cond_metric = 0.0;
  std::uint64_t f_evals = 0;
  std::uint64_t g_evals = 0;
};

RunResult run(const Vector& x0, const SymMatrix& H0, NoisyOracle& oracle, const AlgoConfig& config,
              int run_id = 0);

}  // namespace nbfgs
