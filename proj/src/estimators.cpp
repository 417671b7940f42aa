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

#include "adlis/estimators.hpp"

#include "adlis/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace adlis {

std::string to_string(Method m) {
  switch (m) {
    case Method::Base: return "base";
    case Method::Adla: return "adla";
    case Method::Is: return "is";
    case Method::Pm: return "pm";
    case Method::Qmc: return "qmc";
    case Method::Rqmc: return "rqmc";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Base, Method::Adla, Method::Is, Method::Pm, Method::Qmc, Method::Rqmc}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidEstimatorSpec("unknown method '" + name + "'");
}

EstimatorSpec EstimatorSpec::make(Method method, int n, int latent_dim, std::uint64_t seed) {
  EstimatorSpec spec;
  spec.method = method;
  spec.seed = seed;
  spec.n = method == Method::Adla ? 1 : n;
  if (spec.n < 1) throw InvalidEstimatorSpec("sample count must be >= 1");
  if (method == Method::Is) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    spec.fixed_eps.resize(spec.n, latent_dim);
    for (Eigen::Index i = 0; i < spec.fixed_eps.size(); ++i) spec.fixed_eps.data()[i] = normal(rng);
  }
  if (method == Method::Qmc || method == Method::Rqmc) spec.lds = sobol_points(latent_dim, spec.n);
  return spec;
}

void EstimatorSpec::validate(int latent_dim) const {
  if (n < 1) throw InvalidEstimatorSpec("sample count must be >= 1");
  if (method == Method::Adla && n != 1) throw InvalidEstimatorSpec("ADLA uses exactly one point");
  if (method == Method::Is && (fixed_eps.rows() != n || fixed_eps.cols() != latent_dim)) {
    throw InvalidEstimatorSpec("IS requires an n x d_z fixed noise matrix");
  }
  if ((method == Method::Qmc || method == Method::Rqmc) &&
      (lds.n() != n || lds.dim() != latent_dim)) {
    throw InvalidEstimatorSpec("QMC/RQMC require n low-discrepancy points of dimension d_z");
  }
}

Vector ImportanceSet::probabilities() const {
  const double lse = logsumexp(log_weights);
  return (log_weights.array() - lse).exp().matrix();
}

double ImportanceSet::normalized_ess() const {
  const double lse = logsumexp(log_weights);
  const double lse2 = logsumexp(Vector(2.0 * log_weights));
  return std::exp(2.0 * lse - lse2) / static_cast<double>(n());
}

EvaluatedTarget evaluate_importance(const LatentGaussianModel& model,
                                    std::shared_ptr<const LaplaceFit> fit_ptr, const Matrix& eps,
                                    bool with_gradient, bool with_eps_gradient) {
  const LaplaceFit& fit = *fit_ptr;
  const Eigen::Index n = eps.rows();
  const Eigen::Index dz = fit.latent_dim();
  if (eps.cols() != dz) throw ShapeMismatch("noise dimension does not match the latent dimension");
  if (n < 1) throw InvalidEstimatorSpec("need at least one importance point");
  if ((with_gradient || with_eps_gradient) && fit.path != FactorizationPath::Fast) {
    throw GenericPathUnsupported("estimator gradients need the fast factorization path");
  }
  const Matrix& s_mat = fit.sqrt_sigma.matrix();
  const Vector& eta = fit.theta.eta;

  EvaluatedTarget out;
  out.importance_set.z_points = transform_latent(fit, eps);
  out.importance_set.log_weights.resize(n);

  // Per-point quantities kept for the gradient pass.
  Matrix a_points(n, dz), g_points(n, dz);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector e = eps.row(i).transpose();
    const Vector z = out.importance_set.z_points.row(i).transpose();
    const bool at_mode = (e.array() == 0.0).all();
    // a_i = K^-1 z_i = a + S^-T e - W S e
    Vector a_i = fit.a;
    double ll;
    if (at_mode) {
      ll = fit.log_lik;
      if (with_gradient || with_eps_gradient) g_points.row(i) = (fit.c - fit.a).transpose();
    } else {
      const Vector delta = s_mat * e;
      a_i += tri_solve(fit.sqrt_sigma, e, true) - fit.w_diag.cwiseProduct(delta);
      if (with_gradient || with_eps_gradient) {
        const LikelihoodDerivatives d = model.likelihood(eta, z);
        ll = d.log_lik;
        g_points.row(i) = (d.c - a_i).transpose();
      } else {
        ll = model.log_likelihood(eta, z);
      }
    }
    a_points.row(i) = a_i.transpose();
    out.importance_set.log_weights(i) =
        fit.log_prior - 0.5 * z.dot(a_i) + ll - fit.half_log_det_b + 0.5 * e.squaredNorm();
  }

  const Vector& lw = out.importance_set.log_weights;
  out.log_density = logsumexp(lw) - std::log(static_cast<double>(n));
  out.fit = std::move(fit_ptr);
  if (!with_gradient && !with_eps_gradient) return out;

  const Vector p = out.importance_set.probabilities();

  if (with_eps_gradient) {
    // d log w_i / d eps_i = S^T g_i + eps_i
    Matrix grad_eps(n, dz);
    for (Eigen::Index i = 0; i < n; ++i) {
      grad_eps.row(i) = p(i) * (s_mat.transpose() * g_points.row(i).transpose() +
                                eps.row(i).transpose()).transpose();
    }
    out.grad_aux = grad_eps;
  }
  if (!with_gradient) return out;

  // Weighted sums of the per-point tangents.
  Vector mode_tangent = fit.s;
  Matrix factor_tangent = Matrix::Zero(dz, dz);
  Matrix outer = Matrix::Zero(dz, dz);
  Vector eta_explicit = Vector::Zero(model.eta_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p(i) == 0.0) continue;
    const Vector g = g_points.row(i).transpose();
    const Vector a_i = a_points.row(i).transpose();
    mode_tangent += p(i) * g;
    factor_tangent.noalias() += p(i) * g * eps.row(i);
    outer.noalias() += (0.5 * p(i)) * a_i * a_i.transpose();
    if (model.eta_dim() > 0) {
      eta_explicit += p(i) * model.grad_eta_loglik(eta, out.importance_set.z_points.row(i).transpose());
    }
  }
  const Matrix cov_tangent = cholesky_backward(fit.sqrt_sigma, factor_tangent);
  const Matrix ava = fit.sigma * cov_tangent * fit.sigma;
  // Sigma depends on z_hat through W
  mode_tangent += ava.diagonal().cwiseProduct(fit.third_diag);

  Vector grad(model.theta_dim());
  model.log_prior(fit.theta.theta(), &grad);
  if (model.xi_dim() > 0) {
    const Matrix omega = outer - 0.5 * fit.r + fit.d * mode_tangent * fit.c.transpose() +
                         fit.d * cov_tangent * fit.d.transpose();
    grad.head(model.xi_dim()) += model.kernel_vjp(fit.theta.xi, omega);
  }
  if (model.eta_dim() > 0) {
    grad.tail(model.eta_dim()) += eta_explicit +
                                  model.vjp_c(eta, fit.z_hat, fit.sigma * mode_tangent) +
                                  model.vjp_w(eta, fit.z_hat, -0.5 * fit.sigma.diagonal() - ava.diagonal());
  }
  out.grad_theta = grad;
  return out;
}

namespace {

std::shared_ptr<const LaplaceFit> make_fit(const LatentGaussianModel& model, const Vector& theta) {
  return std::make_shared<const LaplaceFit>(fit_laplace(model, theta));
}

}  // namespace

EvaluatedTarget eval_adla(const LatentGaussianModel& model, const Vector& theta, bool with_gradient) {
  auto fit = make_fit(model, theta);
  EvaluatedTarget out;
  out.log_density = adla_log_density(*fit);
  if (with_gradient) out.grad_theta = adla_gradient(model, *fit);
  out.importance_set.z_points = fit->z_hat.transpose();
  out.importance_set.log_weights = Vector::Constant(1, out.log_density);
  out.fit = std::move(fit);
  return out;
}

EvaluatedTarget eval_is(const LatentGaussianModel& model, const Vector& theta,
                        const EstimatorSpec& spec, bool with_gradient) {
  spec.validate(model.latent_dim());
  if (spec.method != Method::Is) throw InvalidEstimatorSpec("eval_is needs an IS spec");
  return evaluate_importance(model, make_fit(model, theta), spec.fixed_eps, with_gradient);
}

EvaluatedTarget eval_pm(const LatentGaussianModel& model, const Vector& theta, const Matrix& eps,
                        bool with_gradient) {
  if (eps.cols() != model.latent_dim() || eps.rows() < 1) {
    throw ShapeMismatch("PM noise must be n x d_z");
  }
  EvaluatedTarget out = evaluate_importance(model, make_fit(model, theta), eps, with_gradient,
                                            with_gradient);
  const double log_phi = -0.5 * eps.squaredNorm() -
                         0.5 * static_cast<double>(eps.size()) * std::log(2.0 * std::numbers::pi);
  out.log_density += log_phi;
  if (out.grad_aux) *out.grad_aux -= eps;
  out.importance_set.exact_recovery = true;
  return out;
}

EvaluatedTarget eval_qmc(const LatentGaussianModel& model, const Vector& theta,
                         const EstimatorSpec& spec, bool with_gradient) {
  spec.validate(model.latent_dim());
  if (spec.method != Method::Qmc && spec.method != Method::Rqmc) {
    throw InvalidEstimatorSpec("eval_qmc needs low-discrepancy points");
  }
  return evaluate_importance(model, make_fit(model, theta), inverse_cdf_rows(spec.lds), with_gradient);
}

EvaluatedTarget eval_rqmc(const LatentGaussianModel& model, std::shared_ptr<const LaplaceFit> fit,
                          const EstimatorSpec& spec, const Vector& shift, bool with_gradient) {
  spec.validate(model.latent_dim());
  if (spec.method != Method::Qmc && spec.method != Method::Rqmc) {
    throw InvalidEstimatorSpec("eval_rqmc needs low-discrepancy points");
  }
  for (Eigen::Index j = 0; j < shift.size(); ++j) {
    if (!(shift(j) >= 0.0 && shift(j) < 1.0)) throw DomainError("RQMC shift must lie in [0,1)");
  }
  const UnitCubePoints shifted = shift_mod1(spec.lds, shift);
  // pi(U) = 1 on the unit cube, so the log density gains nothing.
  EvaluatedTarget out = evaluate_importance(model, std::move(fit), inverse_cdf_rows(shifted), with_gradient);
  out.importance_set.exact_recovery = true;
  return out;
}

EvaluatedTarget eval_rqmc(const LatentGaussianModel& model, const Vector& theta,
                          const EstimatorSpec& spec, const Vector& shift, bool with_gradient) {
  return eval_rqmc(model, make_fit(model, theta), spec, shift, with_gradient);
}

EvaluatedTarget eval_estimator(const LatentGaussianModel& model, const Vector& theta,
                               const EstimatorSpec& spec, bool with_gradient) {
  switch (spec.method) {
    case Method::Adla: return eval_adla(model, theta, with_gradient);
    case Method::Is: return eval_is(model, theta, spec, with_gradient);
    case Method::Qmc: return eval_qmc(model, theta, spec, with_gradient);
    default:
      throw InvalidEstimatorSpec("eval_estimator handles ADLA, IS and QMC; got " + to_string(spec.method));
  }
}

}  // namespace adlis
