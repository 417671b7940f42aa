// Test-only reference computations. Nothing here calls into the code paths
// it is used to check.
#pragma once

#include "adlis/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace adlis::testing {

inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                                 double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    g(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// max_k |a_k - b_k| / max(||b||_inf, 1e-3)
inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max(b.lpNorm<Eigen::Infinity>(), 1e-3);
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

inline double relative_error(double a, double b) {
  return std::fabs(a - b) / std::max(std::fabs(b), 1e-3);
}

/// log N(y; 0, cov) via Eigen's LDLT, independent of adlis::cholesky.
inline double gaussian_log_density(const Vector& y, const Matrix& cov) {
  Eigen::LDLT<Matrix> ldlt(cov);
  const double quad = y.dot(ldlt.solve(y));
  const double log_det = ldlt.vectorD().array().log().sum();
  return -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

/// Squared-exponential covariance alpha^2 exp(-d^2 / 2 rho^2) on scalar inputs.
inline Matrix se_kernel(const Vector& x, double rho, double alpha) {
  Matrix k(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double d = x(i) - x(j);
      k(i, j) = alpha * alpha * std::exp(-0.5 * d * d / (rho * rho));
    }
  }
  return k;
}

inline Matrix random_spd(int n, std::mt19937_64& rng, double ridge = 1.0) {
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  Matrix m = a * a.transpose();
  m.diagonal().array() += ridge;
  return m;
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return a;
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  return scale * random_matrix(n, 1, rng).col(0);
}

/// Composite Simpson on [lo, hi] with `panels` (even) panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return acc * h / 3.0;
}

/// Kolmogorov-Smirnov distance between samples and a reference CDF.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, std::fabs(f - i / n), std::fabs((i + 1) / n - f)});
  }
  return d;
}

}  // namespace adlis::testing
