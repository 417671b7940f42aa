/*
 * Copyright 2026 The adlis Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "adlis/model.hpp"

#include "adlis/errors.hpp"

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace adlis {

Vector ModelParameters::theta() const {
  Vector out(xi.size() + eta.size());
  out << xi, eta;
  return out;
}

ModelParameters ModelParameters::split(const Vector& theta, Eigen::Index xi_dim) {
  if (xi_dim < 0 || xi_dim > theta.size()) {
    throw ShapeMismatch("theta of size " + std::to_string(theta.size()) +
                        " cannot hold " + std::to_string(xi_dim) + " kernel parameters");
  }
  return {theta.head(xi_dim), theta.tail(theta.size() - xi_dim)};
}

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

namespace priors {

double normal_lpdf(double x, double mean, double sd, double* dx) {
  const double r = (x - mean) / sd;
  if (dx) *dx = -r / sd;
  return -0.5 * r * r - std::log(sd) - kLogSqrt2Pi;
}

double exponential_on_log(double s, double* ds) {
  const double e = std::exp(s);
  if (ds) *ds = 1.0 - e;
  return s - e;
}

double half_normal_on_log(double s, double* ds) {
  const double e = std::exp(s);
  if (ds) *ds = 1.0 - e * e;
  return std::log(2.0) - 0.5 * e * e - kLogSqrt2Pi + s;
}

double inv_gamma_on_log(double s, double shape, double scale, double* ds) {
  const double inv = std::exp(-s);
  if (ds) *ds = -shape + scale * inv;
  return shape * std::log(scale) - std::lgamma(shape) - shape * s - scale * inv;
}

double uniform_correlation_on_atanh(double x, double* dx) {
  const double r = std::tanh(x);
  if (dx) *dx = -2.0 * r;
  return std::log(0.5) + std::log1p(-r * r);
}

}  // namespace priors

namespace {

using priors::normal_lpdf;

void check_theta(const Vector& theta, int expected, const char* model) {
  if (theta.size() != expected) {
    throw ShapeMismatch(std::string(model) + " expects " + std::to_string(expected) +
                        " hyperparameters, got " + std::to_string(theta.size()));
  }
}

// Squared-exponential kernel on scalar inputs, parameters (log rho, log alpha).
struct SquaredExponential {
  Vector x;
  double nugget = 0.0;

  Matrix operator()(const Vector& xi) const {
    const double rho = std::exp(xi(0));
    const double alpha2 = std::exp(2.0 * xi(1));
    const Eigen::Index n = x.size();
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double d = x(i) - x(j);
        k(i, j) = k(j, i) = alpha2 * std::exp(-0.5 * d * d / (rho * rho));
      }
      k(i, i) += nugget;
    }
    return k;
  }

  Vector vjp(const Vector& xi, const Matrix& omega) const {
    const double rho = std::exp(xi(0));
    const double alpha2 = std::exp(2.0 * xi(1));
    const Eigen::Index n = x.size();
    double g_rho = 0.0;
    double g_alpha = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d2 = (x(i) - x(j)) * (x(i) - x(j)) / (rho * rho);
        const double kij = alpha2 * std::exp(-0.5 * d2);
        g_rho += omega(i, j) * kij * d2;
        g_alpha += omega(i, j) * 2.0 * kij;
      }
    }
    return Vector{{g_rho, g_alpha}};
  }
};

Vector empty_vector() { return Vector(0); }

// Elementwise Poisson log-link likelihood shared by the Poisson models.
LikelihoodDerivatives poisson_derivatives(const Vector& y, const Vector& z) {
  if (z.size() != y.size()) throw ShapeMismatch("latent size does not match data");
  LikelihoodDerivatives out;
  const Vector mu = z.array().exp();
  out.log_lik = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    out.log_lik += y(i) * z(i) - mu(i) - std::lgamma(y(i) + 1.0);
  }
  out.c = y - mu;
  out.w_diag = mu;
  out.third_diag = -mu;
  return out;
}

double poisson_log_lik(const Vector& y, const Vector& z) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    acc += y(i) * z(i) - std::exp(z(i)) - std::lgamma(y(i) + 1.0);
  }
  return acc;
}

Dataset one_column_dataset(const Vector& x, const Vector& y) {
  Dataset d;
  d.columns = {"index", "x", "y"};
  d.rows.resize(y.size(), 3);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    d.rows(i, 0) = static_cast<double>(i);
    d.rows(i, 1) = x.size() ? x(i) : 0.0;
    d.rows(i, 2) = y(i);
  }
  return d;
}

// ---------------------------------------------------------------------------

class GaussianConjugate final : public LatentGaussianModel {
 public:
  GaussianConjugate(Vector x, Vector y, double sigma_obs, bool estimate_sigma)
      : kernel_{std::move(x), 0.0},
        y_(std::move(y)),
        log_sigma_center_(std::log(sigma_obs)),
        estimate_sigma_(estimate_sigma) {}

  std::string name() const override { return "gaussian"; }
  int latent_dim() const override { return static_cast<int>(y_.size()); }
  int xi_dim() const override { return 2; }
  int eta_dim() const override { return estimate_sigma_ ? 1 : 0; }
  std::vector<std::string> parameter_names() const override {
    if (estimate_sigma_) return {"log_rho", "log_alpha", "log_sigma"};
    return {"log_rho", "log_alpha"};
  }

  double log_prior(const Vector& theta, Vector* grad) const override {
    check_theta(theta, theta_dim(), "gaussian");
    Vector g(theta_dim());
    double lp = normal_lpdf(theta(0), 0.0, 1.0, &g(0));
    lp += normal_lpdf(theta(1), 0.0, 1.0, &g(1));
    if (estimate_sigma_) lp += normal_lpdf(theta(2), log_sigma_center_, 1.0, &g(2));
    if (grad) *grad = g;
    return lp;
  }

  Matrix kernel(const Vector& xi) const override { return kernel_(xi); }
  Vector kernel_vjp(const Vector& xi, const Matrix& omega) const override {
    return kernel_.vjp(xi, omega);
  }

  LikelihoodDerivatives likelihood(const Vector& eta, const Vector& z) const override {
    if (z.size() != y_.size()) throw ShapeMismatch("latent size does not match data");
    const double log_s = log_sigma(eta);
    const double s2 = std::exp(2.0 * log_s);
    const Vector r = y_ - z;
    LikelihoodDerivatives out;
    out.log_lik = -0.5 * r.squaredNorm() / s2 - static_cast<double>(y_.size()) * (log_s + kLogSqrt2Pi);
    out.c = r / s2;
    out.w_diag = Vector::Constant(y_.size(), 1.0 / s2);
    out.third_diag = Vector::Zero(y_.size());
    return out;
  }

  Vector grad_eta_loglik(const Vector& eta, const Vector& z) const override {
    if (!estimate_sigma_) return Vector(0);
    const double s2 = std::exp(2.0 * eta(0));
    return Vector::Constant(1, (y_ - z).squaredNorm() / s2 - static_cast<double>(y_.size()));
  }

  Vector vjp_c(const Vector& eta, const Vector& z, const Vector& v) const override {
    if (!estimate_sigma_) return Vector(0);
    const double s2 = std::exp(2.0 * eta(0));
    return Vector::Constant(1, -2.0 * v.dot(y_ - z) / s2);
  }

  Vector vjp_w(const Vector& eta, const Vector&, const Vector& w) const override {
    if (!estimate_sigma_) return Vector(0);
    const double s2 = std::exp(2.0 * eta(0));
    return Vector::Constant(1, -2.0 * w.sum() / s2);
  }

  Vector initial_theta() const override {
    if (estimate_sigma_) return Vector{{0.0, 0.0, log_sigma_center_}};
    return Vector{{0.0, 0.0}};
  }
  Dataset dataset() const override { return one_column_dataset(kernel_.x, y_); }

 private:
  double log_sigma(const Vector& eta) const { return estimate_sigma_ ? eta(0) : log_sigma_center_; }

  SquaredExponential kernel_;
  Vector y_;
  double log_sigma_center_;
  bool estimate_sigma_;
};

// ---------------------------------------------------------------------------

class GpPoisson final : public LatentGaussianModel {
 public:
  GpPoisson(Vector x, Vector y, double nugget)
      : kernel_{std::move(x), nugget}, y_(std::move(y)) {}

  std::string name() const override { return "gp-poisson"; }
  int latent_dim() const override { return static_cast<int>(y_.size()); }
  int xi_dim() const override { return 2; }
  int eta_dim() const override { return 0; }
  std::vector<std::string> parameter_names() const override { return {"log_rho", "log_alpha"}; }

  double log_prior(const Vector& theta, Vector* grad) const override {
    check_theta(theta, 2, "gp-poisson");
    Vector g(2);
    double lp = priors::inv_gamma_on_log(theta(0), 3.0, 2.0, &g(0));
    lp += priors::exponential_on_log(theta(1), &g(1));
    if (grad) *grad = g;
    return lp;
  }

  Matrix kernel(const Vector& xi) const override { return kernel_(xi); }
  Vector kernel_vjp(const Vector& xi, const Matrix& omega) const override {
    return kernel_.vjp(xi, omega);
  }
  LikelihoodDerivatives likelihood(const Vector&, const Vector& z) const override {
    return poisson_derivatives(y_, z);
  }
  double log_likelihood(const Vector&, const Vector& z) const override {
    return poisson_log_lik(y_, z);
  }
  Vector grad_eta_loglik(const Vector&, const Vector&) const override { return empty_vector(); }
  Vector vjp_c(const Vector&, const Vector&, const Vector&) const override { return empty_vector(); }
  Vector vjp_w(const Vector&, const Vector&, const Vector&) const override { return empty_vector(); }

  Vector initial_theta() const override {
    boost::math::inverse_gamma_distribution<double> rho_prior(3.0, 2.0);
    return Vector{{std::log(boost::math::median(rho_prior)), std::log(std::log(2.0))}};
  }
  Dataset dataset() const override { return one_column_dataset(kernel_.x, y_); }

 private:
  SquaredExponential kernel_;
  Vector y_;
};

// ---------------------------------------------------------------------------

class ScalarPoisson final : public LatentGaussianModel {
 public:
  ScalarPoisson(int y, double prior_scale) : y_(Vector::Constant(1, y)), prior_scale_(prior_scale) {}

  std::string name() const override { return "scalar-poisson"; }
  int latent_dim() const override { return 1; }
  int xi_dim() const override { return 1; }
  int eta_dim() const override { return 0; }
  std::vector<std::string> parameter_names() const override { return {"log_sigma"}; }

  double log_prior(const Vector& theta, Vector* grad) const override {
    check_theta(theta, 1, "scalar-poisson");
    double g = 0.0;
    const double lp = normal_lpdf(theta(0), 0.0, prior_scale_, &g);
    if (grad) *grad = Vector::Constant(1, g);
    return lp;
  }

  Matrix kernel(const Vector& xi) const override {
    return Matrix::Constant(1, 1, std::exp(2.0 * xi(0)));
  }
  Vector kernel_vjp(const Vector& xi, const Matrix& omega) const override {
    return Vector::Constant(1, omega(0, 0) * 2.0 * std::exp(2.0 * xi(0)));
  }
  LikelihoodDerivatives likelihood(const Vector&, const Vector& z) const override {
    return poisson_derivatives(y_, z);
  }
  double log_likelihood(const Vector&, const Vector& z) const override {
    return poisson_log_lik(y_, z);
  }
  Vector grad_eta_loglik(const Vector&, const Vector&) const override { return empty_vector(); }
  Vector vjp_c(const Vector&, const Vector&, const Vector&) const override { return empty_vector(); }
  Vector vjp_w(const Vector&, const Vector&, const Vector&) const override { return empty_vector(); }

  Vector initial_theta() const override { return Vector::Zero(1); }
  Dataset dataset() const override { return one_column_dataset(Vector(), y_); }

 private:
  Vector y_;
  double prior_scale_;
};

// ---------------------------------------------------------------------------

class MixedEffectsNb final : public LatentGaussianModel {
 public:
  MixedEffectsNb(Matrix x, Vector t, std::vector<int> group, Vector y, int groups, double nugget)
      : x_(std::move(x)), t_(std::move(t)), group_(std::move(group)), y_(std::move(y)),
        groups_(groups), nugget_(nugget) {}

  std::string name() const override { return "mixed-nb"; }
  int latent_dim() const override { return static_cast<int>(y_.size()); }
  int xi_dim() const override { return 3; }
  int eta_dim() const override { return static_cast<int>(x_.cols()) + 2; }
  std::vector<std::string> parameter_names() const override {
    std::vector<std::string> names{"log_T1", "log_T2", "atanh_corr"};
    for (Eigen::Index k = 0; k < x_.cols(); ++k) names.push_back("beta" + std::to_string(k));
    names.push_back("log_phi");
    names.push_back("log_sigma_beta");
    return names;
  }

  double log_prior(const Vector& theta, Vector* grad) const override {
    check_theta(theta, theta_dim(), "mixed-nb");
    const Eigen::Index p = x_.cols();
    Vector g = Vector::Zero(theta.size());
    double lp = priors::half_normal_on_log(theta(0), &g(0));
    lp += priors::half_normal_on_log(theta(1), &g(1));
    // LKJ(1) on a 2x2 correlation: r uniform on (-1, 1), r = tanh(x).
    lp += priors::uniform_correlation_on_atanh(theta(2), &g(2));
    const double log_sb = theta(3 + p + 1);
    const double sb = std::exp(log_sb);
    for (Eigen::Index k = 0; k < p; ++k) {
      const double b = theta(3 + k);
      lp += normal_lpdf(b, 0.0, sb, &g(3 + k));
      g(3 + p + 1) += b * b / (sb * sb) - 1.0;
    }
    lp += priors::exponential_on_log(theta(3 + p), &g(3 + p));
    double g_sb = 0.0;
    lp += priors::half_normal_on_log(log_sb, &g_sb);
    g(3 + p + 1) += g_sb;
    if (grad) *grad = g;
    return lp;
  }

  Matrix kernel(const Vector& xi) const override {
    const Matrix sigma = random_effect_covariance(xi);
    const Eigen::Index n = y_.size();
    Matrix k = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        if (group_[i] != group_[j]) continue;
        const double v = sigma(0, 0) + sigma(0, 1) * (t_(i) + t_(j)) + sigma(1, 1) * t_(i) * t_(j);
        k(i, j) = k(j, i) = v;
      }
      k(i, i) += nugget_;
    }
    return k;
  }

  Vector kernel_vjp(const Vector& xi, const Matrix& omega) const override {
    const double t1 = std::exp(xi(0));
    const double t2 = std::exp(xi(1));
    const double r = std::tanh(xi(2));
    Vector g = Vector::Zero(3);
    const Eigen::Index n = y_.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (group_[i] != group_[j]) continue;
        const double sum_t = t_(i) + t_(j);
        g(0) += omega(i, j) * (2.0 * t1 * t1 + r * t1 * t2 * sum_t);
        g(1) += omega(i, j) * (r * t1 * t2 * sum_t + 2.0 * t2 * t2 * t_(i) * t_(j));
        g(2) += omega(i, j) * (1.0 - r * r) * t1 * t2 * sum_t;
      }
    }
    return g;
  }

  LikelihoodDerivatives likelihood(const Vector& eta, const Vector& z) const override {
    check_latent(z);
    const Eigen::Index p = x_.cols();
    const double phi = std::exp(eta(p));
    const Vector f = x_ * eta.head(p) + z;
    LikelihoodDerivatives out;
    out.c.resize(z.size());
    out.w_diag.resize(z.size());
    out.third_diag.resize(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double mu = std::exp(f(i));
      const double yi = y_(i);
      const double s = phi + mu;
      out.log_lik += negative_binomial_log_pmf(yi, mu, phi);
      out.c(i) = phi * (yi - mu) / s;
      out.w_diag(i) = (yi + phi) * phi * mu / (s * s);
      out.third_diag(i) = -(yi + phi) * phi * mu * (phi - mu) / (s * s * s);
    }
    return out;
  }

  double log_likelihood(const Vector& eta, const Vector& z) const override {
    check_latent(z);
    const Eigen::Index p = x_.cols();
    const double phi = std::exp(eta(p));
    const Vector f = x_ * eta.head(p) + z;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      acc += negative_binomial_log_pmf(y_(i), std::exp(f(i)), phi);
    }
    return acc;
  }

  Vector grad_eta_loglik(const Vector& eta, const Vector& z) const override {
    check_latent(z);
    const Eigen::Index p = x_.cols();
    const double phi = std::exp(eta(p));
    const Vector f = x_ * eta.head(p) + z;
    Vector c(z.size());
    double g_phi = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double mu = std::exp(f(i));
      const double yi = y_(i);
      const double s = phi + mu;
      c(i) = phi * (yi - mu) / s;
      g_phi += boost::math::digamma(yi + phi) - boost::math::digamma(phi) + std::log(phi / s) +
               1.0 - phi / s - yi / s;
    }
    Vector g = Vector::Zero(eta.size());
    g.head(p) = x_.transpose() * c;
    g(p) = phi * g_phi;
    return g;
  }

  Vector vjp_c(const Vector& eta, const Vector& z, const Vector& v) const override {
    check_latent(z);
    const Eigen::Index p = x_.cols();
    const double phi = std::exp(eta(p));
    const Vector f = x_ * eta.head(p) + z;
    Vector dbeta_weights(z.size());
    double g_phi = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double mu = std::exp(f(i));
      const double yi = y_(i);
      const double s = phi + mu;
      const double w = (yi + phi) * phi * mu / (s * s);
      dbeta_weights(i) = -w * v(i);
      g_phi += v(i) * phi * mu * (yi - mu) / (s * s);
    }
    Vector g = Vector::Zero(eta.size());
    g.head(p) = x_.transpose() * dbeta_weights;
    g(p) = g_phi;
    return g;
  }

  Vector vjp_w(const Vector& eta, const Vector& z, const Vector& w) const override {
    check_latent(z);
    const Eigen::Index p = x_.cols();
    const double phi = std::exp(eta(p));
    const Vector f = x_ * eta.head(p) + z;
    Vector dbeta_weights(z.size());
    double g_phi = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double mu = std::exp(f(i));
      const double yi = y_(i);
      const double s = phi + mu;
      const double third = -(yi + phi) * phi * mu * (phi - mu) / (s * s * s);
      dbeta_weights(i) = -third * w(i);
      g_phi += w(i) * phi * mu * (2.0 * phi * mu - yi * phi + yi * mu) / (s * s * s);
    }
    Vector g = Vector::Zero(eta.size());
    g.head(p) = x_.transpose() * dbeta_weights;
    g(p) = g_phi;
    return g;
  }

  Vector initial_theta() const override {
    Vector theta = Vector::Zero(theta_dim());
    const double half_normal_median_log = std::log(0.6744897501960817);
    theta(0) = theta(1) = half_normal_median_log;
    theta(3 + x_.cols()) = std::log(std::log(2.0));
    theta(3 + x_.cols() + 1) = half_normal_median_log;
    return theta;
  }

  Dataset dataset() const override {
    Dataset d;
    d.columns = {"index", "group", "t"};
    for (Eigen::Index k = 0; k < x_.cols(); ++k) d.columns.push_back("x" + std::to_string(k));
    d.columns.push_back("y");
    const Eigen::Index n = y_.size();
    d.rows.resize(n, static_cast<Eigen::Index>(d.columns.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      d.rows(i, 0) = static_cast<double>(i);
      d.rows(i, 1) = group_[i];
      d.rows(i, 2) = t_(i);
      for (Eigen::Index k = 0; k < x_.cols(); ++k) d.rows(i, 3 + k) = x_(i, k);
      d.rows(i, d.rows.cols() - 1) = y_(i);
    }
    return d;
  }

 private:
  void check_latent(const Vector& z) const {
    if (z.size() != y_.size()) throw ShapeMismatch("latent size does not match data");
  }

  Matrix x_;
  Vector t_;
  std::vector<int> group_;
  Vector y_;
  int groups_;
  double nugget_;
};

// ---------------------------------------------------------------------------

class SimpleCauchy final : public LatentGaussianModel {
 public:
  explicit SimpleCauchy(double y) : y_(y) {}

  std::string name() const override { return "simple-cauchy"; }
  int latent_dim() const override { return 1; }
  int xi_dim() const override { return 0; }
  int eta_dim() const override { return 1; }
  std::vector<std::string> parameter_names() const override { return {"theta"}; }
  bool log_concave() const override { return false; }

  double log_prior(const Vector& theta, Vector* grad) const override {
    check_theta(theta, 1, "simple-cauchy");
    double g = 0.0;
    const double lp = normal_lpdf(theta(0), 0.0, 1.0, &g);
    if (grad) *grad = Vector::Constant(1, g);
    return lp;
  }

  Matrix kernel(const Vector&) const override { return Matrix::Identity(1, 1); }
  Vector kernel_vjp(const Vector&, const Matrix&) const override { return empty_vector(); }

  LikelihoodDerivatives likelihood(const Vector& eta, const Vector& z) const override {
    if (z.size() != 1) throw ShapeMismatch("simple-cauchy has one latent coordinate");
    const double r = y_ - z(0) - eta(0);
    const double q = 1.0 + r * r;
    LikelihoodDerivatives out;
    out.log_lik = -std::log(std::numbers::pi) - std::log(q);
    out.c = Vector::Constant(1, 2.0 * r / q);
    out.w_diag = Vector::Constant(1, 2.0 * (1.0 - r * r) / (q * q));
    out.third_diag = Vector::Constant(1, -4.0 * r * (3.0 - r * r) / (q * q * q));
    return out;
  }

  // The shift enters as z + theta, so every eta derivative equals the z one.
  Vector grad_eta_loglik(const Vector& eta, const Vector& z) const override {
    return likelihood(eta, z).c;
  }
  Vector vjp_c(const Vector& eta, const Vector& z, const Vector& v) const override {
    return Vector::Constant(1, -v(0) * likelihood(eta, z).w_diag(0));
  }
  Vector vjp_w(const Vector& eta, const Vector& z, const Vector& w) const override {
    return Vector::Constant(1, -w(0) * likelihood(eta, z).third_diag(0));
  }

  Vector initial_theta() const override { return Vector::Zero(1); }
  Dataset dataset() const override { return one_column_dataset(Vector(), Vector::Constant(1, y_)); }

 private:
  double y_;
};

}  // namespace

// ---------------------------------------------------------------------------

double negative_binomial_log_pmf(double y, double mu, double phi) {
  return std::lgamma(y + phi) - std::lgamma(phi) - std::lgamma(y + 1.0) +
         phi * (std::log(phi) - std::log(phi + mu)) + y * (std::log(mu) - std::log(phi + mu));
}

Matrix random_effect_covariance(const Vector& xi) {
  const double t1 = std::exp(xi(0));
  const double t2 = std::exp(xi(1));
  const double r = std::tanh(xi(2));
  Matrix sigma(2, 2);
  sigma << t1 * t1, r * t1 * t2, r * t1 * t2, t2 * t2;
  return sigma;
}

ModelPtr gaussian_conjugate_model(Vector x, Vector y, double sigma_obs, bool estimate_sigma) {
  if (x.size() != y.size() || y.size() < 1) throw ShapeMismatch("gaussian: x and y must match");
  if (!(sigma_obs > 0.0)) throw DomainError("gaussian: sigma_obs must be positive");
  return std::make_shared<GaussianConjugate>(std::move(x), std::move(y), sigma_obs, estimate_sigma);
}

ModelPtr gaussian_conjugate_model(int dim, double sigma_obs, std::uint64_t seed, bool estimate_sigma) {
  if (dim < 1) throw DomainError("gaussian: dim must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector x(dim);
  for (int i = 0; i < dim; ++i) x(i) = 0.5 * i;
  const SquaredExponential se{x, 0.0};
  const LowerTriangularFactor l = cholesky(se(Vector::Zero(2)));
  Vector nu(dim), noise(dim);
  for (int i = 0; i < dim; ++i) nu(i) = normal(rng);
  for (int i = 0; i < dim; ++i) noise(i) = normal(rng);
  Vector y = l.matrix() * nu + sigma_obs * noise;
  return gaussian_conjugate_model(std::move(x), std::move(y), sigma_obs, estimate_sigma);
}

ModelPtr gp_poisson_model(Vector x, Vector y, double nugget) {
  if (x.size() != y.size() || y.size() < 1) throw ShapeMismatch("gp-poisson: x and y must match");
  return std::make_shared<GpPoisson>(std::move(x), std::move(y), nugget);
}

ModelPtr gp_poisson_model(int n, std::uint64_t seed, double nugget) {
  if (n < 2 || n % 2 != 0) throw DomainError("gp-poisson: N must be even and >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> easy(0.0, 2.0), hard(2.0, 8.0);
  Vector x(n), y(n);
  for (int i = 0; i < n; ++i) {
    const bool first_half = i < n / 2;
    x(i) = first_half ? easy(rng) : hard(rng);
    const double rate = std::exp(std::sin(2.0 * x(i)) + (first_half ? 2.0 : -2.0));
    std::poisson_distribution<int> pois(rate);
    y(i) = pois(rng);
  }
  return gp_poisson_model(std::move(x), std::move(y), nugget);
}

ModelPtr scalar_poisson_model(int y, double prior_scale) {
  if (y < 0) throw DomainError("scalar-poisson: y must be non-negative");
  return std::make_shared<ScalarPoisson>(y, prior_scale);
}

ModelPtr mixed_effects_nb_model(int groups, int per_group, std::uint64_t seed, double nugget) {
  if (groups < 2 || per_group < 2) throw DomainError("mixed-nb: need >= 2 groups and >= 2 per group");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int n = groups * per_group;
  const Vector beta{{1.0, 0.3, -0.2}};
  const double phi = 5.0;
  const Matrix sigma = random_effect_covariance(Vector{{std::log(0.5), std::log(0.3), std::atanh(0.3)}});
  const Eigen::LLT<Matrix> sigma_chol(sigma);
  const Matrix sigma_l = sigma_chol.matrixL();

  Matrix x(n, 3);
  Vector t(n), y(n);
  std::vector<int> group(n);
  for (int g = 0; g < groups; ++g) {
    const double covariate = normal(rng);
    const Vector u = sigma_l * Vector{{normal(rng), normal(rng)}};
    for (int j = 0; j < per_group; ++j) {
      const int i = g * per_group + j;
      group[i] = g;
      t(i) = -1.0 + 2.0 * j / (per_group - 1);
      x(i, 0) = 1.0;
      x(i, 1) = t(i);
      x(i, 2) = covariate;
      const double mu = std::exp(x.row(i).dot(beta) + u(0) + u(1) * t(i));
      std::gamma_distribution<double> gamma(phi, mu / phi);
      std::poisson_distribution<int> pois(gamma(rng));
      y(i) = pois(rng);
    }
  }
  return std::make_shared<MixedEffectsNb>(std::move(x), std::move(t), std::move(group),
                                          std::move(y), groups, nugget);
}

ModelPtr simple_cauchy_model(double y) { return std::make_shared<SimpleCauchy>(y); }

std::vector<std::string> model_ids() {
  return {"gaussian", "gp-poisson", "scalar-poisson", "mixed-nb", "simple-cauchy"};
}

ModelPtr make_model(const std::string& id, int size, std::uint64_t seed) {
  if (id == "gaussian") return gaussian_conjugate_model(size, 0.5, seed);
  if (id == "gaussian-sigma") return gaussian_conjugate_model(size, 0.5, seed, true);
  if (id == "gp-poisson") return gp_poisson_model(size, seed);
  if (id == "scalar-poisson") return scalar_poisson_model(size);
  if (id == "mixed-nb") return mixed_effects_nb_model(size, 4, seed);
  if (id == "simple-cauchy") return simple_cauchy_model(2.0);
  throw DomainError("unknown model '" + id + "'");
}

}  // namespace adlis
