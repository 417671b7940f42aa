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

#pragma once

#include "adlis/numerics.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace adlis {

/// Hyperparameters theta = [xi, eta] in unconstrained space. `xi` drives the
/// prior covariance of the latent field, `eta` the likelihood.
struct ModelParameters {
  Vector xi;
  Vector eta;

  Vector theta() const;
  static ModelParameters split(const Vector& theta, Eigen::Index xi_dim);
};

/// Latent derivatives of log pi(y | eta, z). W is minus the Hessian
/// diagonal; third holds the diagonal of the third derivative.
struct LikelihoodDerivatives {
  double log_lik = 0.0;
  Vector c;
  Vector w_diag;
  Vector third_diag;
};

/// Tabular copy of a model's data for CSV export (index, x..., y).
struct Dataset {
  std::vector<std::string> columns;
  Matrix rows;
};

/// Latent Gaussian model: theta ~ pi(theta), z ~ N(0, K(xi)),
/// y ~ pi(y | eta, z). Implementations own their observations and must be
/// immutable after construction; every method is a pure function.
///
/// The likelihood is assumed to factor so that W is diagonal.
class LatentGaussianModel {
 public:
  virtual ~LatentGaussianModel() = default;

  virtual std::string name() const = 0;
  virtual int latent_dim() const = 0;
  virtual int xi_dim() const = 0;
  virtual int eta_dim() const = 0;
  int theta_dim() const { return xi_dim() + eta_dim(); }
  virtual std::vector<std::string> parameter_names() const = 0;

  /// log pi(theta) in unconstrained space, change-of-variables term included.
  /// Writes the gradient into `grad` when non-null.
  virtual double log_prior(const Vector& theta, Vector* grad = nullptr) const = 0;

  virtual Matrix kernel(const Vector& xi) const = 0;
  /// <omega, dK/dxi_k> for every k.
  virtual Vector kernel_vjp(const Vector& xi, const Matrix& omega) const = 0;

  virtual LikelihoodDerivatives likelihood(const Vector& eta, const Vector& z) const = 0;
  virtual double log_likelihood(const Vector& eta, const Vector& z) const {
    return likelihood(eta, z).log_lik;
  }
  /// Gradient of log pi(y | eta, z) in eta at fixed z.
  virtual Vector grad_eta_loglik(const Vector& eta, const Vector& z) const = 0;
  /// <v, dc/deta_k> at fixed z.
  virtual Vector vjp_c(const Vector& eta, const Vector& z, const Vector& v) const = 0;
  /// <w, dW_diag/deta_k> at fixed z.
  virtual Vector vjp_w(const Vector& eta, const Vector& z, const Vector& w) const = 0;

  /// False for likelihoods whose W can go negative; those models only
  /// support the density-only generic Laplace path.
  virtual bool log_concave() const { return true; }

  /// Prior median mapped to unconstrained space.
  virtual Vector initial_theta() const = 0;

  virtual Dataset dataset() const = 0;
};

using ModelPtr = std::shared_ptr<const LatentGaussianModel>;

/// Conjugate Gaussian regression on a 1-D grid: y ~ N(z, sigma^2 I),
/// squared-exponential kernel. theta = [log rho, log alpha] with sigma =
/// sigma_obs known; with `estimate_sigma` log sigma is appended to theta
/// (prior N(log sigma_obs, 1)).
ModelPtr gaussian_conjugate_model(int dim, double sigma_obs, std::uint64_t seed = 0,
                                  bool estimate_sigma = false);
ModelPtr gaussian_conjugate_model(Vector x, Vector y, double sigma_obs, bool estimate_sigma = false);

/// Synthetic log-Gaussian Cox GP: N/2 points on (0,2) with rate
/// exp(sin 2x + 2), N/2 on (2,8) with rate exp(sin 2x - 2).
/// theta = [log rho, log alpha], rho ~ InvGamma(3, scale 2), alpha ~ Exp(1).
/// `nugget` is added to the kernel diagonal.
ModelPtr gp_poisson_model(int n, std::uint64_t seed, double nugget = 1e-6);
ModelPtr gp_poisson_model(Vector x, Vector y, double nugget = 1e-6);

/// One latent coordinate with K = sigma^2 and y ~ Poisson(e^z);
/// theta = [log sigma] with a standard normal prior.
ModelPtr scalar_poisson_model(int y = 3, double prior_scale = 1.0);

/// Mixed-effects negative binomial regression with per-group random
/// intercept and slope, written as one latent per observation with a
/// block-diagonal covariance. xi = [log T1, log T2, atanh(corr)],
/// eta = [beta_1..beta_p, log phi, log sigma_beta].
ModelPtr mixed_effects_nb_model(int groups, int per_group, std::uint64_t seed,
                                double nugget = 1e-6);

/// 2x2 random-effect covariance T L L^T T for the mixed-effects xi.
Matrix random_effect_covariance(const Vector& xi);

/// Prior log densities on unconstrained scales, Jacobian included.
/// Each optionally writes its derivative.
namespace priors {
double normal_lpdf(double x, double mean, double sd, double* dx = nullptr);
/// s = log x, x ~ Exp(1)
double exponential_on_log(double s, double* ds = nullptr);
/// s = log x, x ~ HalfNormal(1)
double half_normal_on_log(double s, double* ds = nullptr);
/// s = log x, x ~ InvGamma(shape, scale)
double inv_gamma_on_log(double s, double shape, double scale, double* ds = nullptr);
/// x = atanh r, r ~ Uniform(-1, 1)
double uniform_correlation_on_atanh(double x, double* dx = nullptr);
}  // namespace priors

/// NB2 log pmf with mean mu and dispersion phi.
double negative_binomial_log_pmf(double y, double mu, double phi);

/// theta ~ N(0,1), z ~ N(theta, 1), y ~ Cauchy(z, 1), with the shift folded
/// into the likelihood. Not log-concave.
ModelPtr simple_cauchy_model(double y = 2.0);

/// Builds a model by identifier: gaussian, gp-poisson, scalar-poisson,
/// mixed-nb, simple-cauchy, gaussian-sigma (gaussian with log sigma in
/// theta). `size` is the dimension / N / groups.
ModelPtr make_model(const std::string& id, int size, std::uint64_t seed);
std::vector<std::string> model_ids();

}  // namespace adlis
