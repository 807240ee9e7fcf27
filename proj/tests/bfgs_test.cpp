#include "nbfgs/bfgs.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_support.hpp"

namespace nbfgs {
namespace {

using testing::Rng;

const Vector kBenchmarkSpectrum{1e-2, 1.0, 1e2, 1e4};

BfgsState start(Vector x, SymMatrix H) {
  BfgsState state;
  state.x = std::move(x);
  state.H = std::move(H);
  return state;
}

// Product form (I - rho s y^T) H (I - rho y s^T) + rho s s^T, evaluated densely.
std::vector<double> product_form_update(const SymMatrix& H, const Vector& s, const Vector& y) {
  const std::size_t d = s.size();
  const double rho = 1.0 / dot(s, y);
  std::vector<double> left(d * d);
  std::vector<double> right(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      left[i * d + j] = (i == j ? 1.0 : 0.0) - rho * s[i] * y[j];
      right[i * d + j] = (i == j ? 1.0 : 0.0) - rho * y[i] * s[j];
    }
  auto out = testing::dense_product(testing::dense_product(left, H.to_dense(), d), right, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += rho * s[i] * s[j];
  return out;
}

TEST(DirectionTest, Examples) {
  EXPECT_EQ(compute_direction(SymMatrix::identity(2), {1, 2}), (Vector{-1, -2}));
  const Vector x{3, -1};
  const Vector tx{2 * 3, 8 * -1};
  EXPECT_EQ(compute_direction(SymMatrix::diagonal({0.5, 0.125}), tx), -x);
  EXPECT_EQ(compute_direction(SymMatrix::identity(2), Vector(2)), Vector(2));
  EXPECT_THROW(compute_direction(SymMatrix::identity(2), Vector(3)), DimensionError);
}

TEST(UpdateTest, OneDimensionalCollapse) {
  for (double h : {0.1, 1.0, 7.0}) {
    const auto updated = bfgs_update(SymMatrix::diagonal({h}), {{1.0}, {4.0}});
    EXPECT_DOUBLE_EQ(updated(0, 0), 0.25);
  }
}

TEST(UpdateTest, IdentityFixedPoint) {
  const Vector u{0.6, 0.8};
  const auto updated = bfgs_update(SymMatrix::identity(2), {u, u});
  EXPECT_LE(testing::frobenius_diff(updated.to_dense(), SymMatrix::identity(2).to_dense()), 1e-15);
}

TEST(UpdateTest, SecantOnHandExample) {
  const Vector s{1, 0};
  const Vector y{2, 1};
  const auto updated = bfgs_update(SymMatrix::identity(2), {s, y});
  EXPECT_LE(norm2(sym_apply(updated, y) - s), 1e-12);
  EXPECT_LE(testing::frobenius_diff(updated.to_dense(),
                                    product_form_update(SymMatrix::identity(2), s, y)),
            1e-14);
}

TEST(UpdateTest, RejectsNonPositiveCurvature) {
  EXPECT_THROW(bfgs_update(SymMatrix::identity(2), {{1, 0}, {-1, 0}}), ContractError);
  EXPECT_THROW(bfgs_update(SymMatrix::identity(2), {{1, 0}, {0, 1}}), ContractError);
}

TEST(UpdateTest, MatchesProductFormAndPreservesDefiniteness) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + trial % 6;
    const auto H = testing::rotated_diagonal(rng, testing::log_uniform_spectrum(rng, d, 1e-2, 1e2));
    Vector s = testing::random_vector(rng, d);
    Vector y = testing::random_vector(rng, d);
    if (dot(s, y) <= 0) y = -y;
    if (dot(s, y) < 1e-3 * norm2(s) * norm2(y)) continue;
    const auto updated = bfgs_update(H, {s, y});
    const auto oracle = product_form_update(H, s, y);
    EXPECT_LE(testing::frobenius_diff(updated.to_dense(), oracle), 1e-9 * updated.frobenius_norm());
    EXPECT_GT(jacobi_eigenvalues(updated)[0], 0.0);
    EXPECT_LE(norm2(sym_apply(updated, y) - s), 1e-8 * norm2(s));
  }
}

TEST(PairTest, FailedSearchLengthens) {
  const auto q = make_quadratic(4, kBenchmarkSpectrum);
  NoisyOracle oracle(q, NoiseModel(1, 1, 4));
  const Vector x{1, 1, 1, 1};
  const Vector g_x = oracle.g(x);
  const auto pair = build_pair(oracle, x, -g_x, 0.0, g_x, 400.0);
  EXPECT_TRUE(pair.lengthened);
  EXPECT_NEAR(norm2(pair.s), 400.0, 400.0 * 1e-12);
  EXPECT_EQ(pair.g_evals, 2);
}

TEST(PairTest, BoundaryStepIsNotLengthened) {
  const auto q = make_quadratic(2, {1, 2});
  NoisyOracle oracle(q, NoiseModel(0, 0, 0));
  const Vector x{1, 1};
  const Vector g_x = oracle.g(x);
  const Vector p{-3, -4};  // ||p|| = 5
  const auto pair = build_pair(oracle, x, p, 1.0, g_x, 5.0);
  EXPECT_FALSE(pair.lengthened);
  EXPECT_EQ(pair.s, p);
  EXPECT_EQ(pair.g_evals, 1);
  EXPECT_EQ(pair.y, q->gradient(x + p) - g_x);
}

TEST(PairTest, NoiselessLengthenedPairIsRayleighQuotient) {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = make_quadratic(4, kBenchmarkSpectrum, static_cast<std::uint64_t>(trial));
    NoisyOracle oracle(q, NoiseModel(0, 0, 0));
    const Vector x = testing::random_vector(rng, 4);
    const Vector g_x = oracle.g(x);
    const Vector p = testing::random_vector(rng, 4);
    const auto pair = build_pair(oracle, x, p, 1e-3, g_x, 10.0 * norm2(p));
    ASSERT_TRUE(pair.lengthened);
    const Vector ts = sym_apply(q->matrix(), pair.s);
    EXPECT_LE(norm2(pair.y - ts), 1e-10 * norm2(ts));
    const double rayleigh = dot(pair.s, ts) / dot(pair.s, pair.s);
    EXPECT_NEAR(dot(pair.y, pair.s) / dot(pair.s, pair.s), rayleigh, 1e-9 * rayleigh);
  }
}

TEST(PairTest, ZeroDirectionRejected) {
  NoisyOracle oracle(make_quadratic(2, {1, 2}), NoiseModel(0, 0, 0));
  EXPECT_THROW(build_pair(oracle, {1, 1}, Vector(2), 1.0, {1, 2}, 1.0), ContractError);
}

TEST(StepTest, ZeroGradientConvergesWithoutFunctionCall) {
  NoisyOracle oracle(make_quadratic(2, {1, 2}), NoiseModel(0, 0, 0));
  BfgsState state = start(Vector(2), SymMatrix::identity(2));
  const auto result = step(state, oracle, {});
  EXPECT_EQ(result.status, RunStatus::converged);
  EXPECT_FALSE(result.record.has_value());
  EXPECT_EQ(oracle.f_evals(), 0u);
  EXPECT_EQ(oracle.g_evals(), 1u);
}

TEST(StepTest, NewtonStepReachesMinimizer) {
  NoisyOracle oracle(make_quadratic(2, {1, 2}), NoiseModel(0, 0, 0));
  BfgsState state = start({1, 1}, SymMatrix::diagonal({1.0, 0.5}));
  const auto result = step(state, oracle, {.l = 1e-8});
  ASSERT_TRUE(result.record.has_value());
  EXPECT_EQ(result.status, RunStatus::running);
  EXPECT_EQ(result.record->alpha, 1.0);
  EXPECT_EQ(result.state.x, Vector(2));
  EXPECT_EQ(result.state.iter, 1);
}

TEST(StepTest, FailedSearchKeepsIterateButUpdatesH) {
  // phi = 50 x^2 with H = I: the unit step overshoots and a single trial is allowed.
  NoisyOracle oracle(make_quadratic(1, {100.0}), NoiseModel(0, 0, 0));
  AlgoConfig config;
  config.l = 0.5;
  config.line_search.max_bisections = 1;
  BfgsState state = start({1.0}, SymMatrix::identity(1));
  const auto result = step(state, oracle, config);
  ASSERT_TRUE(result.record.has_value());
  EXPECT_TRUE(result.record->ls_failed);
  EXPECT_TRUE(result.record->lengthened);
  EXPECT_EQ(result.record->alpha, 0.0);
  EXPECT_EQ(result.state.x, (Vector{1.0}));
  EXPECT_EQ(result.state.consecutive_failures, 1);
  EXPECT_NEAR(result.state.H(0, 0), 0.01, 1e-16);
}

TEST(StepTest, StallsAfterConfiguredFailures) {
  NoisyOracle oracle(make_quadratic(1, {100.0}), NoiseModel(0, 0, 0));
  AlgoConfig config;
  config.l = 0.5;
  config.max_consecutive_failures = 1;
  config.line_search.max_bisections = 1;
  const auto result = run({1.0}, SymMatrix::identity(1), oracle, config);
  EXPECT_EQ(result.status, RunStatus::stalled);
  EXPECT_EQ(result.records.size(), 1u);
}

TEST(RunTest, ZeroIterationBudget) {
  NoisyOracle oracle(make_quadratic(4, kBenchmarkSpectrum), NoiseModel(1, 1, 0));
  AlgoConfig config;
  config.max_iters = 0;
  const auto result = run(1e5 * Vector::ones(4), SymMatrix::identity(4), oracle, config);
  EXPECT_TRUE(result.records.empty());
  EXPECT_EQ(result.status, RunStatus::iter_limit);
}

TEST(RunTest, RejectsIndefiniteStart) {
  NoisyOracle oracle(make_quadratic(2, {1, 2}), NoiseModel(0, 0, 0));
  EXPECT_THROW(run({1, 1}, SymMatrix::diagonal({1, -1}), oracle, {}), NotPositiveDefinite);
  EXPECT_THROW(run({1, 1, 1}, SymMatrix::identity(3), oracle, {}), DimensionError);
}

TEST(RunTest, NoiselessBenchmarkConverges) {
  NoisyOracle oracle(make_quadratic(4, kBenchmarkSpectrum), NoiseModel(0, 0, 0));
  const auto result = run(1e5 * Vector::ones(4), SymMatrix::identity(4), oracle, {.l = 1e-8});
  EXPECT_EQ(result.status, RunStatus::converged);
  EXPECT_LE(result.final_grad_true_norm, 1e-5);
  EXPECT_LE(result.records.size(), 60u);
}

TEST(RunTest, ToString) {
  EXPECT_EQ(to_string(RunStatus::converged), "converged");
  EXPECT_EQ(to_string(RunStatus::stalled), "stalled");
  EXPECT_EQ(to_string(RunStatus::iter_limit), "iter_limit");
}

// Replays a noisy run step by step and checks the per-iteration invariants.
TEST(RunTest, NoisyRunInvariants) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto q = make_quadratic(4, kBenchmarkSpectrum, seed % 2 ? std::optional<std::uint64_t>{}
                                                                   : std::optional{seed});
    NoisyOracle oracle(q, NoiseModel(1, 1, seed));
    AlgoConfig config;
    config.l = 4.0 / 1e-2;
    BfgsState state = start(1e5 * Vector::ones(4), SymMatrix::identity(4));
    double f_prev = std::numeric_limits<double>::infinity();
    double xi = std::numeric_limits<double>::infinity();
    for (int k = 0; k < config.max_iters; ++k) {
      const auto result = step(state, oracle, config);
      if (!result.record) break;
      const auto& rec = *result.record;
      EXPECT_LE(rec.f_noisy, f_prev);
      f_prev = rec.f_noisy;
      xi = std::min(xi, rec.phi_true);
      EXPECT_LE(rec.phi_true, xi + 2.0);
      EXPECT_GE(rec.gap, 0.0);
      EXPECT_GE(rec.cond_metric, 1.0 - 1e-9);
      EXPECT_LE(std::abs(rec.cos_theta), 1.0);

      EXPECT_GT(jacobi_eigenvalues(result.state.H)[0], 0.0);
      ASSERT_TRUE(result.state.f.has_value());
      EXPECT_LE(*result.state.f, rec.f_noisy);
      if (rec.ls_failed) {
        EXPECT_EQ(result.state.x, state.x);
        EXPECT_EQ(*result.state.f, rec.f_noisy);
      }
      state = result.state;
    }
  }
}

TEST(RunTest, EveryNoisyPairSatisfiesSecantIdentity) {
  Rng rng(23);
  const auto q = make_quadratic(4, kBenchmarkSpectrum, 8);
  NoisyOracle oracle(q, NoiseModel(1, 1, 8));
  const double l = 400.0;
  SymMatrix H = SymMatrix::identity(4);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector x = testing::random_vector(rng, 4, 1e3);
    const Vector g_x = oracle.g(x);
    const Vector p = compute_direction(H, g_x);
    const double alpha = trial % 3 == 0 ? 0.0 : testing::log_uniform(rng, 1e-3, 1e3);
    const auto pair = build_pair(oracle, x, p, alpha, g_x, l);
    if (pair.lengthened) {
      EXPECT_NEAR(norm2(pair.s), l, l * 1e-12);
      ASSERT_GT(dot(pair.s, pair.y), 0.0);
    }
    if (dot(pair.s, pair.y) <= 0.0) continue;
    H = bfgs_update(H, pair);
    EXPECT_LE(norm2(sym_apply(H, pair.y) - pair.s), 1e-8 * norm2(pair.s));
    EXPECT_GT(jacobi_eigenvalues(H)[0], 0.0);
    if (trial % 50 == 49) H = SymMatrix::identity(4);
  }
}

}  // namespace
}  // namespace nbfgs
