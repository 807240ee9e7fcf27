#include "nbfgs/line_search.hpp"

#include <cmath>
#include <limits>

namespace nbfgs {

void LineSearchParams::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
    throw std::invalid_argument("line search: need 0 < c1 < c2 < 1");
  }
  if (max_bisections < 1) throw std::invalid_argument("line search: max_bisections must be >= 1");
}

bool check_armijo(NoisyOracle& oracle, const Vector& x, const Vector& p, double alpha, double f_x,
                  const Vector& g_x, double c1) {
  const double f_trial = oracle.f(x + alpha * p);
  return f_trial <= f_x + c1 * alpha * dot(p, g_x);
}

bool check_curvature(NoisyOracle& oracle, const Vector& x, const Vector& p, double alpha,
                     const Vector& g_x, double c2) {
  return dot(p, oracle.g(x + alpha * p)) >= c2 * dot(p, g_x);
}

LineSearchOutcome armijo_wolfe_search(NoisyOracle& oracle, const Vector& x, const Vector& p,
                                      double f_x, const Vector& g_x,
                                      const LineSearchParams& params) {
  params.validate();
  const double slope = dot(p, g_x);
  if (!(slope < 0.0)) {
    throw ContractError("armijo_wolfe_search: p is not a descent direction (p^T g = " +
                        std::to_string(slope) + ")");
  }

  LineSearchOutcome out;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double alpha = 1.0;
  for (int trial = 0; trial < params.max_bisections; ++trial) {
    ++out.trial_count;
    const Vector x_trial = x + alpha * p;
    const double f_trial = oracle.f(x_trial);
    ++out.f_evals;
    if (f_trial > f_x + params.c1 * alpha * slope) {
      hi = alpha;
    } else {
      const Vector g_trial = oracle.g(x_trial);
      ++out.g_evals;
      if (dot(p, g_trial) >= params.c2 * slope) {
        out.status = SearchStatus::success;
        out.alpha = alpha;
        out.f_trial = f_trial;
        return out;
      }
      lo = alpha;
    }
    alpha = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
  }
  out.status = SearchStatus::failure;
  out.alpha = 0.0;
  return out;
}

}  // namespace nbfgs
