#include "nbfgs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nbfgs {
namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

// Dense row-major scratch matrix used by the eigensolver.
struct Dense {
  std::size_t n;
  std::vector<double> a;
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

double off_diagonal_mass(const Dense& m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = i + 1; j < m.n; ++j) sum += 2.0 * m(i, j) * m(i, j);
  return std::sqrt(sum);
}

}  // namespace

Vector& Vector::operator+=(const Vector& other) {
  require_same_size(size(), other.size(), "Vector +=");
  for (std::size_t i = 0; i < size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_size(size(), other.size(), "Vector -=");
  for (std::size_t i = 0; i < size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) { return a *= -1.0; }
Vector operator*(double scale, Vector a) { return a *= scale; }
Vector operator*(Vector a, double scale) { return a *= scale; }

double dot(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm2(const Vector& a) {
  // Scaled accumulation keeps ||x|| finite for entries near the overflow limit.
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double sum = 0.0;
  for (double v : a) {
    const double r = v / scale;
    sum += r * r;
  }
  return scale * std::sqrt(sum);
}

bool all_finite(const Vector& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

SymMatrix SymMatrix::from_dense(std::size_t n, std::span<const double> row_major) {
  require_same_size(row_major.size(), n * n, "SymMatrix::from_dense");
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = row_major[i * n + i];
    for (std::size_t j = i + 1; j < n; ++j)
      m(i, j) = 0.5 * (row_major[i * n + j] + row_major[j * n + i]);
  }
  return m;
}

std::vector<double> SymMatrix::to_dense() const {
  std::vector<double> out(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out[i * n_ + j] = (*this)(i, j);
  return out;
}

double SymMatrix::frobenius_norm() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    sum += (*this)(i, i) * (*this)(i, i);
    for (std::size_t j = i + 1; j < n_; ++j) sum += 2.0 * (*this)(i, j) * (*this)(i, j);
  }
  return std::sqrt(sum);
}

double SymMatrix::trace() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) sum += (*this)(i, i);
  return sum;
}

bool SymMatrix::all_finite() const {
  return std::all_of(packed_.begin(), packed_.end(), [](double v) { return std::isfinite(v); });
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  require_same_size(n_, other.n_, "SymMatrix +=");
  for (std::size_t k = 0; k < packed_.size(); ++k) packed_[k] += other.packed_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  require_same_size(n_, other.n_, "SymMatrix -=");
  for (std::size_t k = 0; k < packed_.size(); ++k) packed_[k] -= other.packed_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double scale) {
  for (double& v : packed_) v *= scale;
  return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double scale, SymMatrix a) { return a *= scale; }

Vector sym_apply(const SymMatrix& a, const Vector& v) {
  require_same_size(a.dim(), v.size(), "sym_apply");
  Vector out(v.size());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) sum += a(i, j) * v[j];
    out[i] = sum;
  }
  return out;
}

SymMatrix outer(const Vector& v, double a) {
  SymMatrix m(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i; j < v.size(); ++j) m(i, j) = a * v[i] * v[j];
  return m;
}

SymMatrix congruence(const SymMatrix& s, const SymMatrix& a) {
  require_same_size(s.dim(), a.dim(), "congruence");
  const std::size_t n = s.dim();
  std::vector<double> sa(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double sik = s(i, k);
      for (std::size_t j = 0; j < n; ++j) sa[i * n + j] += sik * a(k, j);
    }
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double v = sa[i * n + k];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += v * s(k, j);
    }
  return SymMatrix::from_dense(n, out);
}

EigenDecomposition jacobi_eigen(const SymMatrix& a, JacobiOptions options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("jacobi_eigen: tol must be positive");
  if (!a.all_finite()) throw std::invalid_argument("jacobi_eigen: non-finite entries");
  const std::size_t n = a.dim();
  Dense m{n, a.to_dense()};
  Dense v{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double threshold = options.tol * a.frobenius_norm();
  EigenDecomposition result;
  int sweep = 0;
  while (off_diagonal_mass(m) >= threshold && threshold > 0.0) {
    if (sweep == options.max_sweeps) {
      throw NoConvergence("jacobi_eigen: no convergence after " +
                          std::to_string(options.max_sweeps) + " sweeps");
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        // Rotation that annihilates m(p, q).
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return m(i, i) < m(j, j); });
  result.values = Vector(n);
  result.vectors.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t col = order[k];
    result.values[k] = m(col, col);
    Vector vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = v(i, col);
    result.vectors.push_back(std::move(vec));
  }
  result.sweeps = sweep;
  return result;
}

Vector jacobi_eigenvalues(const SymMatrix& a, double tol) {
  return jacobi_eigen(a, {.tol = tol}).values;
}

namespace {

EigenDecomposition require_positive_definite(const SymMatrix& a, double tol, const char* what) {
  auto eig = jacobi_eigen(a, {.tol = tol});
  if (a.dim() == 0 || !(eig.values[0] > 0.0)) {
    throw NotPositiveDefinite(std::string(what) + ": matrix is not positive definite");
  }
  return eig;
}

SymMatrix spectral_map(const EigenDecomposition& eig, double (*fn)(double)) {
  const std::size_t n = eig.values.size();
  SymMatrix out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = fn(eig.values[k]);
    const Vector& u = eig.vectors[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) out(i, j) += w * u[i] * u[j];
  }
  return out;
}

}  // namespace

SymMatrix sym_sqrt(const SymMatrix& a, double tol) {
  auto eig = require_positive_definite(a, tol, "sym_sqrt");
  if (!(eig.values[0] > tol * a.frobenius_norm())) {
    throw NotPositiveDefinite("sym_sqrt: smallest eigenvalue below tolerance");
  }
  return spectral_map(eig, [](double x) { return std::sqrt(x); });
}

double condition_number(const SymMatrix& a, double tol) {
  auto eig = require_positive_definite(a, tol, "condition_number");
  return eig.values[eig.values.size() - 1] / eig.values[0];
}

SymMatrix inverse_spd(const SymMatrix& a, double tol) {
  auto eig = require_positive_definite(a, tol, "inverse_spd");
  return spectral_map(eig, [](double x) { return 1.0 / x; });
}

std::string to_string(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

}  // namespace nbfgs
