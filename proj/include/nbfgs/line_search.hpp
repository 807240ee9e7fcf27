#pragma once

#include <stdexcept>

#include "nbfgs/linalg.hpp"
#include "nbfgs/problems.hpp"

namespace nbfgs {

/// Armijo-Wolfe parameters. Requires 0 < c1 < c2 < 1 and max_bisections >= 1.
struct LineSearchParams {
  double c1 = 0.01;
  double c2 = 0.5;
  int max_bisections = 64;

  void validate() const;
};

/// Raised when the search is called with a direction that is not a descent
/// direction for the cached noisy gradient. Search failure is not an error.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class SearchStatus { success, failure };

struct LineSearchOutcome {
  SearchStatus status = SearchStatus::failure;
  double alpha = 0.0;  // 0 on failure
  int trial_count = 0;
  int f_evals = 0;
  int g_evals = 0;
  double f_trial = 0.0;  // noisy f at the accepted point (success only)

  bool succeeded() const { return status == SearchStatus::success; }
};

// Noisy sufficient-decrease test: f(x + alpha p) <= f_x + c1 alpha p^T g_x.
// Costs one f-eval.
bool check_armijo(NoisyOracle& oracle, const Vector& x, const Vector& p, double alpha, double f_x,
                  const Vector& g_x, double c1);

// Noisy weak Wolfe curvature test: p^T g(x + alpha p) >= c2 p^T g_x.
// Costs one g-eval.
bool check_curvature(NoisyOracle& oracle, const Vector& x, const Vector& p, double alpha,
                     const Vector& g_x, double c2);

// Bisection Armijo-Wolfe search on the noisy oracle. Starts at alpha = 1 with
// bracket [0, inf): an Armijo failure shrinks the upper end, a curvature
// failure raises the lower end; the next trial doubles while no upper end
// exists and bisects otherwise. Gives up after max_bisections trials.
// f_x and g_x are the caller's cached oracle values at x.
LineSearchOutcome armijo_wolfe_search(NoisyOracle& oracle, const Vector& x, const Vector& p,
                                      double f_x, const Vector& g_x,
                                      const LineSearchParams& params);

}  // namespace nbfgs
