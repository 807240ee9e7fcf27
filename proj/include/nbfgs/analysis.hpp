#pragma once

// Executable versions of the constants and predicates from the convergence
// theory of BFGS with bounded errors. None of these feed back into the
// optimizer; they are diagnostics and test oracles.

#include <optional>
#include <span>
#include <vector>

#include "nbfgs/bfgs.hpp"
#include "nbfgs/linalg.hpp"

namespace nbfgs::analysis {

struct CurvatureRatios {
  double lower;  // y^T s / s^T s
  double upper;  // y^T y / y^T s
};

CurvatureRatios curvature_ratios(const Vector& s, const Vector& y);
inline CurvatureRatios curvature_ratios(const CurvaturePair& pair) {
  return curvature_ratios(pair.s, pair.y);
}

struct CurvatureBounds {
  double m_hat;
  double M_hat;
};

// m_hat = m - 2 eps_g / l, M_hat = M + 2 eps_g / l. Requires l > 2 eps_g / m.
CurvatureBounds lengthening_bounds(double m, double M, double eps_g, double l);

// ||y - (L + mu)/2 s|| <= (L - mu)/2 ||s|| (with 1e-12 absolute slack): true
// iff some symmetric H with spectrum in [mu, L] maps s to y.
bool eigen_interval_predicate(const Vector& s, const Vector& y, double mu, double L);

// Constructive converse: a symmetric H with H s = y and spectrum in [mu, L],
// built from a Householder-style reflection. Throws if the predicate fails.
SymMatrix construct_interval_map(const Vector& s, const Vector& y, double mu, double L);

struct GoodIterateConstants {
  double beta0;
  double beta1;  // exp(-beta0 / 2); 0 when it underflows
  bool beta1_underflow;
};

// beta0 = (tr(B0) - log det(B0) + M_hat - 1 - log m_hat) / (1 - q), B0 = H0^{-1}.
GoodIterateConstants good_iterate_constants(double q, const SymMatrix& H0, double m_hat,
                                            double M_hat);

struct ABConstants {
  double A;
  double B;
};

// Constants of the neighborhood bound for deltas fixed at
// delta1 = delta2 = (c2 - c1)/4, delta1_hat = c1/2, delta2_hat = (1 - c2)/2.
ABConstants ab_constants(double c1, double c2);

struct Radius {
  double value;    // +inf when unbounded
  bool unbounded;  // beta1 == 0
};

// max{A sqrt(M eps_f) / beta1, B eps_g / beta1}.
Radius n1_radius(const ABConstants& ab, double beta1, double M, double eps_f, double eps_g);

// Gradient-norm threshold beyond which a good iterate needs no lengthening:
// max{A sqrt(M eps_f)/beta1, B eps_g/beta1, 4 l M / ((1 - c2) beta1)}.
Radius no_lengthening_threshold(const ABConstants& ab, double beta1, double M, double eps_f,
                                double eps_g, double l, double c2);

enum class TransferDirection {
  noisy_from_true,  // an Armijo-Wolfe step exists for (f, g)
  true_from_noisy,  // a noisy Armijo-Wolfe step is one for (phi, grad phi)
};

// Lower bound on ||grad phi(x_k)|| required by the respective transfer
// theorem, evaluated with the fixed deltas. +inf when a cosine is <= 0 and
// the noise is non-zero.
double transfer_threshold(double cos_theta, double cos_theta_tilde, double c1, double c2, double M,
                          double eps_f, double eps_g, TransferDirection direction);

bool transfer_conditions_hold(double grad_true_norm, double cos_theta, double cos_theta_tilde,
                              double c1, double c2, double M, double eps_f, double eps_g,
                              TransferDirection direction);

// phi_after - phi_before <= -c1 (1 - c2) / M cos^2 theta ||grad||^2 + 1e-9.
bool descent_bound_check(double phi_before, double phi_after, double grad_true_norm,
                         double cos_theta_tilde, double c1, double c2, double M);

struct Quartiles {
  double min;
  double q1;
  double median;
  double q3;
  double max;
};

// Linear-interpolation quartiles of a non-empty sample.
Quartiles quartiles(std::vector<double> values);

struct GoodIterateStats {
  std::vector<int> good_counts;  // good_counts[k] = |J_k|, k = 0..n
  std::vector<bool> bound_holds;  // |J_k| >= q k
  bool all_hold = true;
  std::optional<Quartiles> cos_theta;
};

GoodIterateStats good_iterate_stats(std::span<const IterateRecord> records, double beta1, double q);

// Running minimum xi_k = min_{i <= k} phi_i. Throws on empty input.
std::vector<double> envelope_sequence(std::span<const double> phi_values);

struct TheoryConstants {
  double m_hat = 0;
  double M_hat = 0;
  double q = 0.5;
  double beta0 = 0;
  double beta1 = 0;
  bool beta1_underflow = false;
  double A = 0;
  double B = 0;
  double zeta = 0;  // c1 (1 - c2) beta1^2 / (16 M)
  double rho = 1;   // (1 - m zeta)^q
  double n1_radius = 0;
  bool n1_unbounded = false;
  double no_lengthening_threshold = 0;
};

struct TheoryInputs {
  double m;
  double M;
  double eps_f;
  double eps_g;
  double l;
  double c1;
  double c2;
  double q = 0.5;
  SymMatrix H0;
};

TheoryConstants theory_constants(const TheoryInputs& in);

}  // namespace nbfgs::analysis
