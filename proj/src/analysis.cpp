#include "nbfgs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nbfgs::analysis {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntervalSlack = 1e-12;
constexpr double kDescentSlack = 1e-9;

void require_interval(double mu, double L, const char* what) {
  if (!(0.0 < mu && mu <= L) || !std::isfinite(L)) {
    throw std::invalid_argument(std::string(what) + ": need 0 < mu <= L");
  }
}

void require_nonzero(const Vector& v, const char* what) {
  if (norm2(v) == 0.0) throw std::invalid_argument(std::string(what) + ": zero vector");
}

// noise / cosine, where zero noise makes the term vanish regardless of the
// angle and a non-positive cosine makes it unbounded.
double noise_over_cos(double numerator, double cosine) {
  if (numerator == 0.0) return 0.0;
  if (!(cosine > 0.0)) return kInf;
  return numerator / cosine;
}

}  // namespace

CurvatureRatios curvature_ratios(const Vector& s, const Vector& y) {
  const double ss = dot(s, s);
  const double ys = dot(y, s);
  if (ss == 0.0) throw std::invalid_argument("curvature_ratios: s = 0");
  if (ys == 0.0) throw std::invalid_argument("curvature_ratios: s^T y = 0");
  return {ys / ss, dot(y, y) / ys};
}

CurvatureBounds lengthening_bounds(double m, double M, double eps_g, double l) {
  if (!(m > 0.0 && m <= M)) throw std::invalid_argument("lengthening_bounds: need 0 < m <= M");
  if (!(eps_g >= 0.0)) throw std::invalid_argument("lengthening_bounds: eps_g must be >= 0");
  if (!(l > 0.0) || !(l > 2.0 * eps_g / m)) {
    throw std::invalid_argument("lengthening_bounds: need l > 2 eps_g / m");
  }
  const double shift = 2.0 * eps_g / l;
  return {m - shift, M + shift};
}

bool eigen_interval_predicate(const Vector& s, const Vector& y, double mu, double L) {
  require_nonzero(s, "eigen_interval_predicate");
  require_nonzero(y, "eigen_interval_predicate");
  require_interval(mu, L, "eigen_interval_predicate");
  const double center = 0.5 * (L + mu);
  return norm2(y - center * s) <= 0.5 * (L - mu) * norm2(s) + kIntervalSlack;
}

SymMatrix construct_interval_map(const Vector& s, const Vector& y, double mu, double L) {
  if (!eigen_interval_predicate(s, y, mu, L)) {
    throw std::invalid_argument("construct_interval_map: (s, y) violates the interval predicate");
  }
  const std::size_t d = s.size();
  const double center = 0.5 * (L + mu);
  const Vector r = y - center * s;
  const double r_norm = norm2(r);
  SymMatrix H = center * SymMatrix::identity(d);
  if (r_norm == 0.0) return H;

  const double s_norm = norm2(s);
  const Vector u = (1.0 / s_norm) * s;
  const Vector v = (1.0 / r_norm) * r;
  const double radius = r_norm / s_norm;
  const Vector w = u + v;
  const double w_norm = norm2(w);
  if (w_norm == 0.0) {
    // v = -u: Q = -I.
    H -= radius * SymMatrix::identity(d);
    return H;
  }
  if (dot(u, v) >= 0.0) {
    // Q = 2 e e^T - I with e = (u + v) / ||u + v|| maps u to v.
    const Vector e = (1.0 / w_norm) * w;
    H += radius * (outer(e, 2.0) - SymMatrix::identity(d));
    return H;
  }
  // Nearly opposite u and v: u + v cancels, so use the reflection
  // Q = I - 2 f f^T with f = (u - v) / ||u - v||, which also maps u to v.
  const Vector diff = u - v;
  const Vector f = (1.0 / norm2(diff)) * diff;
  H += radius * (SymMatrix::identity(d) - outer(f, 2.0));
  return H;
}

GoodIterateConstants good_iterate_constants(double q, const SymMatrix& H0, double m_hat,
                                            double M_hat) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("good_iterate_constants: q in (0, 1)");
  if (!(m_hat > 0.0)) throw std::invalid_argument("good_iterate_constants: m_hat must be > 0");
  const Vector lambda = jacobi_eigenvalues(H0);
  if (!(lambda[0] > 0.0)) throw NotPositiveDefinite("good_iterate_constants: H0 not SPD");
  // Spectrum of B0 = H0^{-1} is 1 / lambda(H0).
  double trace_b0 = 0.0;
  double log_det_b0 = 0.0;
  for (double l : lambda) {
    trace_b0 += 1.0 / l;
    log_det_b0 -= std::log(l);
  }
  const double beta0 = (trace_b0 - log_det_b0 + M_hat - 1.0 - std::log(m_hat)) / (1.0 - q);
  const double beta1 = std::exp(-0.5 * beta0);
  return {beta0, beta1, beta1 == 0.0};
}

ABConstants ab_constants(double c1, double c2) {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
    throw std::invalid_argument("ab_constants: need 0 < c1 < c2 < 1");
  }
  const double A = std::max(16.0 * std::sqrt(2.0) / std::sqrt((c2 - c1) * (4.0 - c1 - 3.0 * c2)),
                            8.0 / std::sqrt(c1 * (1.0 - c2)));
  const double B = std::max(8.0 / (1.0 - c2), 8.0 * (1.0 + c1) / (c2 - c1) + 6.0);
  return {A, B};
}

Radius n1_radius(const ABConstants& ab, double beta1, double M, double eps_f, double eps_g) {
  if (eps_f == 0.0 && eps_g == 0.0) return {0.0, false};
  if (!(beta1 > 0.0)) return {kInf, true};
  return {std::max(ab.A * std::sqrt(M * eps_f) / beta1, ab.B * eps_g / beta1), false};
}

Radius no_lengthening_threshold(const ABConstants& ab, double beta1, double M, double eps_f,
                                double eps_g, double l, double c2) {
  if (!(beta1 > 0.0)) return {kInf, true};
  const Radius base = n1_radius(ab, beta1, M, eps_f, eps_g);
  return {std::max(base.value, 4.0 * l * M / ((1.0 - c2) * beta1)), false};
}

double transfer_threshold(double cos_theta, double cos_theta_tilde, double c1, double c2, double M,
                          double eps_f, double eps_g, TransferDirection direction) {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
    throw std::invalid_argument("transfer_threshold: need 0 < c1 < c2 < 1");
  }
  const double cos_product = (cos_theta > 0.0 && cos_theta_tilde > 0.0)
                                 ? cos_theta * cos_theta_tilde
                                 : 0.0;
  if (direction == TransferDirection::noisy_from_true) {
    const double delta = 0.25 * (c2 - c1);
    const double t1 = noise_over_cos(4.0 * (c1 + delta) * eps_g / delta, cos_theta);
    const double t2 = noise_over_cos(2.0 * (1.0 + c2 - delta) * eps_g / delta, cos_theta);
    const double t3 =
        std::sqrt(noise_over_cos(16.0 * M * eps_f / ((1.0 - c2 + delta) * delta), cos_product));
    return std::max({t1, t2, t3});
  }
  const double d1 = 0.5 * c1;
  const double d2 = 0.5 * (1.0 - c2);
  const double t1 = noise_over_cos(8.0 * eps_g / (1.0 - c2), cos_theta);
  const double t2 = std::sqrt(noise_over_cos(16.0 * M * eps_f / (d1 * (1.0 - c2)), cos_product));
  const double t3 = noise_over_cos(2.0 * c1 * eps_g / d1, cos_theta_tilde);
  const double t4 = noise_over_cos((1.0 + c2) * eps_g / d2, cos_theta_tilde);
  return std::max({t1, t2, t3, t4});
}

bool transfer_conditions_hold(double grad_true_norm, double cos_theta, double cos_theta_tilde,
                              double c1, double c2, double M, double eps_f, double eps_g,
                              TransferDirection direction) {
  return grad_true_norm >=
         transfer_threshold(cos_theta, cos_theta_tilde, c1, c2, M, eps_f, eps_g, direction);
}

bool descent_bound_check(double phi_before, double phi_after, double grad_true_norm,
                         double cos_theta_tilde, double c1, double c2, double M) {
  const double bound = -c1 * (1.0 - c2) / M * cos_theta_tilde * cos_theta_tilde * grad_true_norm *
                       grad_true_norm;
  return phi_after - phi_before <= bound + kDescentSlack;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("quartiles: empty sample");
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back()};
}

GoodIterateStats good_iterate_stats(std::span<const IterateRecord> records, double beta1,
                                    double q) {
  GoodIterateStats stats;
  stats.good_counts.reserve(records.size() + 1);
  int count = 0;
  std::vector<double> cosines;
  cosines.reserve(records.size());
  for (std::size_t k = 0; k <= records.size(); ++k) {
    stats.good_counts.push_back(count);
    const bool holds = static_cast<double>(count) >= q * static_cast<double>(k);
    stats.bound_holds.push_back(holds);
    stats.all_hold = stats.all_hold && holds;
    if (k < records.size()) {
      const double c = records[k].cos_theta;
      cosines.push_back(c);
      // beta1 = 0 (underflow) makes the threshold vacuous.
      if (beta1 <= 0.0 || c >= beta1) ++count;
    }
  }
  if (!cosines.empty()) stats.cos_theta = quartiles(std::move(cosines));
  return stats;
}

std::vector<double> envelope_sequence(std::span<const double> phi_values) {
  if (phi_values.empty()) throw std::invalid_argument("envelope_sequence: empty input");
  std::vector<double> xi(phi_values.begin(), phi_values.end());
  for (std::size_t k = 1; k < xi.size(); ++k) xi[k] = std::min(xi[k - 1], xi[k]);
  return xi;
}

TheoryConstants theory_constants(const TheoryInputs& in) {
  TheoryConstants tc;
  const CurvatureBounds bounds = lengthening_bounds(in.m, in.M, in.eps_g, in.l);
  tc.m_hat = bounds.m_hat;
  tc.M_hat = bounds.M_hat;
  tc.q = in.q;
  const GoodIterateConstants good = good_iterate_constants(in.q, in.H0, tc.m_hat, tc.M_hat);
  tc.beta0 = good.beta0;
  tc.beta1 = good.beta1;
  tc.beta1_underflow = good.beta1_underflow;
  const ABConstants ab = ab_constants(in.c1, in.c2);
  tc.A = ab.A;
  tc.B = ab.B;
  tc.zeta = in.c1 * (1.0 - in.c2) * tc.beta1 * tc.beta1 / (16.0 * in.M);
  tc.rho = std::exp(in.q * std::log1p(-in.m * tc.zeta));
  const Radius n1 = n1_radius(ab, tc.beta1, in.M, in.eps_f, in.eps_g);
  tc.n1_radius = n1.value;
  tc.n1_unbounded = n1.unbounded;
  tc.no_lengthening_threshold =
      no_lengthening_threshold(ab, tc.beta1, in.M, in.eps_f, in.eps_g, in.l, in.c2).value;
  return tc;
}

}  // namespace nbfgs::analysis
