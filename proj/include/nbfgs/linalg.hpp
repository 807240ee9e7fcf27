#pragma once

// Small dense real linear algebra: vectors, structurally symmetric matrices,
// a cyclic Jacobi eigensolver and the functions built on top of it.
// Dimensions are expected to stay small (d <= 100).

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbfgs {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotPositiveDefinite : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double value = 0.0) : data_(n, value) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  static Vector ones(std::size_t n) { return Vector(n, 1.0); }

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<const double> values() const { return data_; }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double scale);

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double scale, Vector a);
Vector operator*(Vector a, double scale);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
bool all_finite(const Vector& a);

// Symmetric matrix with packed upper-triangle storage, so A(i, j) and A(j, i)
// always refer to the same element.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n, double value = 0.0)
      : n_(n), packed_(n * (n + 1) / 2, value) {}

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(const Vector& diag);
  // Builds from a row-major square array, averaging mirrored entries.
  static SymMatrix from_dense(std::size_t n, std::span<const double> row_major);

  std::size_t dim() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }
  double& operator()(std::size_t i, std::size_t j) { return packed_[index(i, j)]; }

  std::vector<double> to_dense() const;
  double frobenius_norm() const;
  double trace() const;
  bool all_finite() const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double scale);

  bool operator==(const SymMatrix&) const = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i - 1) / 2 + (j - i);
  }

  std::size_t n_ = 0;
  std::vector<double> packed_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double scale, SymMatrix a);

Vector sym_apply(const SymMatrix& a, const Vector& v);

// Symmetric rank-one matrix a * v v^T.
SymMatrix outer(const Vector& v, double a = 1.0);

// S A S for symmetric S and A; the result is symmetrized.
SymMatrix congruence(const SymMatrix& s, const SymMatrix& a);

struct JacobiOptions {
  double tol = 1e-12;
  int max_sweeps = 100;
};

struct EigenDecomposition {
  Vector values;                // ascending
  std::vector<Vector> vectors;  // vectors[k] pairs with values[k]
  int sweeps = 0;
};

// Cyclic Jacobi. Converged when the off-diagonal Frobenius mass drops below
// tol * ||A||_F. Throws NoConvergence when the sweep budget runs out.
EigenDecomposition jacobi_eigen(const SymMatrix& a, JacobiOptions options = {});
Vector jacobi_eigenvalues(const SymMatrix& a, double tol = 1e-12);

// V diag(sqrt(lambda)) V^T; requires every eigenvalue > tol * ||A||_F.
SymMatrix sym_sqrt(const SymMatrix& a, double tol = 1e-12);

// lambda_max / lambda_min; requires a positive definite input.
double condition_number(const SymMatrix& a, double tol = 1e-12);

SymMatrix inverse_spd(const SymMatrix& a, double tol = 1e-12);

std::string to_string(const Vector& v);

}  // namespace nbfgs
