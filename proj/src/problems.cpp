#include "nbfgs/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nbfgs {

double CounterRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_gaussian() {
  const double u1 = 1.0 - next_unit();  // (0, 1]
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

QuadraticProblem::QuadraticProblem(SymMatrix t, Vector eigenvalues)
    : t_(std::move(t)), eigenvalues_(std::move(eigenvalues)) {
  if (t_.dim() != eigenvalues_.size() || eigenvalues_.empty()) {
    throw std::invalid_argument("QuadraticProblem: eigenvalue count must match dimension");
  }
  m_ = *std::min_element(eigenvalues_.begin(), eigenvalues_.end());
  big_m_ = *std::max_element(eigenvalues_.begin(), eigenvalues_.end());
}

double QuadraticProblem::value(const Vector& x) const {
  return 0.5 * dot(x, sym_apply(t_, x));
}

Vector QuadraticProblem::gradient(const Vector& x) const { return sym_apply(t_, x); }

std::vector<double> random_orthogonal(std::size_t d, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 0x726f74));
  std::vector<double> q(d * d);
  for (double& v : q) v = rng.next_gaussian();
  // Rows are orthonormalized with two passes of modified Gram-Schmidt.
  for (std::size_t i = 0; i < d; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < i; ++k) {
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j) proj += q[i * d + j] * q[k * d + j];
        for (std::size_t j = 0; j < d; ++j) q[i * d + j] -= proj * q[k * d + j];
      }
    }
    double nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) nrm += q[i * d + j] * q[i * d + j];
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw std::runtime_error("random_orthogonal: degenerate draw");
    for (std::size_t j = 0; j < d; ++j) q[i * d + j] /= nrm;
  }
  return q;
}

std::shared_ptr<const QuadraticProblem> make_quadratic(std::size_t d, const Vector& eigenvalues,
                                                       std::optional<std::uint64_t> rotation_seed) {
  if (d == 0 || eigenvalues.size() != d) {
    throw std::invalid_argument("make_quadratic: need exactly d eigenvalues");
  }
  for (double lambda : eigenvalues) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("make_quadratic: eigenvalues must be positive and finite");
    }
  }
  if (!rotation_seed) {
    return std::make_shared<QuadraticProblem>(SymMatrix::diagonal(eigenvalues), eigenvalues);
  }
  const auto r = random_orthogonal(d, *rotation_seed);
  SymMatrix t(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < d; ++k) sum += r[k * d + i] * eigenvalues[k] * r[k * d + j];
      t(i, j) = sum;
    }
  return std::make_shared<QuadraticProblem>(std::move(t), eigenvalues);
}

NoiseModel::NoiseModel(double eps_f, double eps_g, std::uint64_t seed)
    : eps_f_(eps_f),
      eps_g_(eps_g),
      seed_(seed),
      f_rng_(derive_seed(seed, 0x66)),
      g_rng_(derive_seed(seed, 0x67)) {
  if (!(eps_f >= 0.0) || !(eps_g >= 0.0) || !std::isfinite(eps_f) || !std::isfinite(eps_g)) {
    throw std::invalid_argument("NoiseModel: noise bounds must be finite and non-negative");
  }
}

double NoiseModel::sample_function_noise() {
  const double u = f_rng_.next_unit();
  return eps_f_ * (2.0 * u - 1.0);
}

Vector NoiseModel::sample_gradient_noise(std::size_t d) {
  if (d == 0) throw std::invalid_argument("sample_gradient_noise: d must be positive");
  Vector e(d);
  // Draws are consumed even for eps_g = 0 so the stream position depends only
  // on the number of calls.
  for (std::size_t i = 0; i < d; ++i) e[i] = g_rng_.next_gaussian();
  const double u = g_rng_.next_unit();
  if (eps_g_ == 0.0) return Vector(d);
  const double n = norm2(e);
  if (n == 0.0) return Vector(d);
  const double radius = eps_g_ * std::pow(u, 1.0 / static_cast<double>(d));
  e *= radius / n;
  while (norm2(e) > eps_g_) e *= 1.0 - 0x1.0p-52;
  return e;
}

NoisyOracle::NoisyOracle(std::shared_ptr<const TrueProblem> problem, NoiseModel noise)
    : problem_(std::move(problem)), noise_(noise) {
  if (!problem_) throw std::invalid_argument("NoisyOracle: null problem");
}

void NoisyOracle::check_dimension(const Vector& x) const {
  if (x.size() != problem_->dimension()) {
    throw DimensionError("NoisyOracle: point has dimension " + std::to_string(x.size()) +
                         ", problem has " + std::to_string(problem_->dimension()));
  }
}

double NoisyOracle::f(const Vector& x) {
  check_dimension(x);
  const double eps = noise_.sample_function_noise();
  if (std::abs(eps) > noise_.eps_f()) throw std::logic_error("function noise exceeds eps_f");
  ++f_evals_;
  return problem_->value(x) + eps;
}

Vector NoisyOracle::g(const Vector& x) {
  check_dimension(x);
  Vector e = noise_.sample_gradient_noise(x.size());
  if (norm2(e) > noise_.eps_g()) throw std::logic_error("gradient noise exceeds eps_g");
  ++g_evals_;
  return problem_->gradient(x) + e;
}

}  // namespace nbfgs
