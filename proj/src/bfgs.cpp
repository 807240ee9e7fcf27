#include "nbfgs/bfgs.hpp"

#include <algorithm>
#include <cmath>

namespace nbfgs {
namespace {

double cosine_to_negative(const Vector& p, const Vector& g) {
  const double denom = norm2(p) * norm2(g);
  if (denom == 0.0) return 0.0;
  return std::clamp(-dot(p, g) / denom, -1.0, 1.0);
}

// Everything that needs ground truth lives here; the optimizer's decisions
// in step() never read these values.
void instrument(IterateRecord& rec, const TrueProblem& truth, const Vector& x,
                const Vector& x_next, const SymMatrix& H, const Vector& p) {
  rec.phi_true = truth.value(x);
  rec.gap = rec.phi_true - truth.optimal_value();
  const Vector grad = truth.gradient(x);
  rec.grad_true_norm = norm2(grad);
  rec.cos_theta_tilde = cosine_to_negative(p, grad);
  rec.cond_metric = hessian_fit_condition(H, truth.hessian(x));
  rec.phi_next = truth.value(x_next);
}

}  // namespace

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::converged: return "converged";
    case RunStatus::stalled: return "stalled";
    case RunStatus::iter_limit: return "iter_limit";
  }
  return "unknown";
}

void AlgoConfig::validate() const {
  if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("AlgoConfig: l must be > 0");
  if (!(grad_tol >= 0.0)) throw std::invalid_argument("AlgoConfig: grad_tol must be >= 0");
  if (max_iters < 0) throw std::invalid_argument("AlgoConfig: max_iters must be >= 0");
  if (max_consecutive_failures < 1) {
    throw std::invalid_argument("AlgoConfig: max_consecutive_failures must be >= 1");
  }
  line_search.validate();
}

Vector compute_direction(const SymMatrix& H, const Vector& g) { return -sym_apply(H, g); }

SymMatrix bfgs_update(const SymMatrix& H, const CurvaturePair& pair) {
  const Vector& s = pair.s;
  const Vector& y = pair.y;
  if (s.size() != H.dim() || y.size() != H.dim()) throw DimensionError("bfgs_update: size mismatch");
  const double sy = dot(s, y);
  if (!(sy > 0.0)) {
    throw ContractError("bfgs_update: curvature condition violated (s^T y = " +
                        std::to_string(sy) + ")");
  }
  const double rho = 1.0 / sy;
  const Vector hy = sym_apply(H, y);
  const double yhy = dot(y, hy);
  // Expanded form: H - rho (s hy^T + hy s^T) + (rho^2 y^T H y + rho) s s^T.
  const double ss_coeff = rho * rho * yhy + rho;
  SymMatrix out = H;
  const std::size_t n = H.dim();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      out(i, j) += -rho * (s[i] * hy[j] + hy[i] * s[j]) + ss_coeff * s[i] * s[j];
  return out;
}

CurvaturePair build_pair(NoisyOracle& oracle, const Vector& x, const Vector& p, double alpha,
                         const Vector& g_x, double l) {
  const double p_norm = norm2(p);
  if (p_norm == 0.0) throw ContractError("build_pair: zero search direction");
  if (alpha < 0.0) throw ContractError("build_pair: negative step");
  CurvaturePair pair;
  if (alpha * p_norm >= l) {
    pair.s = alpha * p;
    pair.y = oracle.g(x + pair.s) - g_x;
    pair.g_evals = 1;
  } else {
    pair.s = (l / p_norm) * p;
    pair.lengthened = true;
    const Vector g_far = oracle.g(x + pair.s);
    pair.y = g_far - oracle.g(x);
    pair.g_evals = 2;
  }
  return pair;
}

double hessian_fit_condition(const SymMatrix& H, const SymMatrix& hessian) {
  return condition_number(congruence(sym_sqrt(H), hessian));
}

StepResult step(const BfgsState& state, NoisyOracle& oracle, const AlgoConfig& config) {
  StepResult result{state, std::nullopt, RunStatus::running};
  const Vector g_x = oracle.g(state.x);
  const double g_norm = norm2(g_x);
  if (g_norm <= config.grad_tol) {
    result.status = RunStatus::converged;
    return result;
  }
  if (state.consecutive_failures >= config.max_consecutive_failures) {
    result.status = RunStatus::stalled;
    return result;
  }
  if (state.iter >= config.max_iters) {
    result.status = RunStatus::iter_limit;
    return result;
  }

  const double f_x = state.f ? *state.f : oracle.f(state.x);
  const Vector p = compute_direction(state.H, g_x);
  const LineSearchOutcome ls =
      armijo_wolfe_search(oracle, state.x, p, f_x, g_x, config.line_search);

  BfgsState& next = result.state;
  next.consecutive_failures = ls.succeeded() ? 0 : state.consecutive_failures + 1;
  const CurvaturePair pair = build_pair(oracle, state.x, p, ls.alpha, g_x, config.l);
  next.H = bfgs_update(state.H, pair);
  if (ls.succeeded()) {
    next.x = state.x + ls.alpha * p;
    next.f = ls.f_trial;
  } else {
    next.f = f_x;
  }
  next.iter = state.iter + 1;

  IterateRecord rec;
  rec.iter = state.iter;
  rec.f_noisy = f_x;
  rec.grad_noisy_norm = g_norm;
  rec.cos_theta = cosine_to_negative(p, g_x);
  rec.alpha = ls.alpha;
  rec.ls_trials = ls.trial_count;
  rec.ls_failed = !ls.succeeded();
  rec.lengthened = pair.lengthened;
  rec.ls_g_evals = ls.g_evals;
  rec.pair_g_evals = pair.g_evals;
  instrument(rec, oracle.truth(), state.x, next.x, state.H, p);
  result.record = rec;
  return result;
}

RunResult run(const Vector& x0, const SymMatrix& H0, NoisyOracle& oracle, const AlgoConfig& config,
              int run_id) {
  config.validate();
  if (x0.size() != oracle.dimension() || H0.dim() != oracle.dimension()) {
    throw DimensionError("run: x0/H0 dimension does not match the problem");
  }
  if (!all_finite(x0)) throw std::invalid_argument("run: x0 must be finite");
  condition_number(H0);  // throws unless H0 is positive definite

  const std::uint64_t f0 = oracle.f_evals();
  const std::uint64_t g0 = oracle.g_evals();
  RunResult out;
  BfgsState state{x0, H0, 0, 0, std::nullopt};
  for (;;) {
    StepResult sr = step(state, oracle, config);
    if (sr.status != RunStatus::running) {
      out.status = sr.status;
      break;
    }
    sr.record->run_id = run_id;
    out.records.push_back(*sr.record);
    state = std::move(sr.state);
  }

  const TrueProblem& truth = oracle.truth();
  out.final_phi = truth.value(state.x);
  out.final_gap = out.final_phi - truth.optimal_value();
  out.final_grad_true_norm = norm2(truth.gradient(state.x));
  out.final_cond_metric = hessian_fit_condition(state.H, truth.hessian(state.x));
  out.final_state = std::move(state);
  out.f_evals = oracle.f_evals() - f0;
  out.g_evals = oracle.g_evals() - g0;
  return out;
}

}  // namespace nbfgs
