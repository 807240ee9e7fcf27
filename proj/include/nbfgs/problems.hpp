#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "nbfgs/linalg.hpp"
#include "nbfgs/random.hpp"

namespace nbfgs {

// A smooth strongly convex objective with known optimal value and curvature
// bounds m <= lambda(hessian(x)) <= M.
class TrueProblem {
 public:
  virtual ~TrueProblem() = default;

  virtual std::size_t dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual SymMatrix hessian(const Vector& x) const = 0;

  virtual double optimal_value() const = 0;
  virtual double strong_convexity() const = 0;
  virtual double lipschitz() const = 0;
};

// phi(x) = 1/2 x^T T x.
class QuadraticProblem final : public TrueProblem {
 public:
  QuadraticProblem(SymMatrix t, Vector eigenvalues);

  std::size_t dimension() const override { return t_.dim(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  SymMatrix hessian(const Vector&) const override { return t_; }

  double optimal_value() const override { return 0.0; }
  double strong_convexity() const override { return m_; }
  double lipschitz() const override { return big_m_; }

  const SymMatrix& matrix() const { return t_; }
  const Vector& eigenvalues() const { return eigenvalues_; }

 private:
  SymMatrix t_;
  Vector eigenvalues_;
  double m_;
  double big_m_;
};

// Random orthogonal matrix (Gram-Schmidt on a Gaussian matrix), row-major.
std::vector<double> random_orthogonal(std::size_t d, std::uint64_t seed);

// T = diag(eigenvalues) without a seed, otherwise R^T diag(eigenvalues) R for
// a seeded random orthogonal R. Throws std::invalid_argument on a
// non-positive eigenvalue or a size mismatch.
std::shared_ptr<const QuadraticProblem> make_quadratic(
    std::size_t d, const Vector& eigenvalues, std::optional<std::uint64_t> rotation_seed = {});

// Bounded noise: |eps| <= eps_f for function values, ||e|| <= eps_g for
// gradients. Function and gradient noise use separate counter streams
// derived from the seed.
class NoiseModel {
 public:
  NoiseModel(double eps_f, double eps_g, std::uint64_t seed);

  double eps_f() const { return eps_f_; }
  double eps_g() const { return eps_g_; }
  std::uint64_t seed() const { return seed_; }

  // Uniform on [-eps_f, eps_f].
  double sample_function_noise();
  // Uniform on the closed ball of radius eps_g in R^d.
  Vector sample_gradient_noise(std::size_t d);

  std::uint64_t function_draws() const { return f_rng_.counter(); }
  std::uint64_t gradient_draws() const { return g_rng_.counter(); }

 private:
  double eps_f_;
  double eps_g_;
  std::uint64_t seed_;
  CounterRng f_rng_;
  CounterRng g_rng_;
};

// The only view of the objective the optimizer uses: f = phi + eps, g = grad + e,
// with fresh noise drawn on every call.
class NoisyOracle {
 public:
  NoisyOracle(std::shared_ptr<const TrueProblem> problem, NoiseModel noise);

  std::size_t dimension() const { return problem_->dimension(); }

  double f(const Vector& x);
  Vector g(const Vector& x);

  std::uint64_t f_evals() const { return f_evals_; }
  std::uint64_t g_evals() const { return g_evals_; }

  const NoiseModel& noise() const { return noise_; }

  // Ground truth, for instrumentation only.
  const TrueProblem& truth() const { return *problem_; }

 private:
  void check_dimension(const Vector& x) const;

  std::shared_ptr<const TrueProblem> problem_;
  NoiseModel noise_;
  std::uint64_t f_evals_ = 0;
  std::uint64_t g_evals_ = 0;
};

}  // namespace nbfgs
