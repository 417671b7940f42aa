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

#include "adlis/laplace.hpp"

#include "adlis/errors.hpp"

#include <cmath>
#include <string>

namespace adlis {

namespace {

void check_derivatives(const LikelihoodDerivatives& d, Eigen::Index n) {
  if (d.c.size() != n || d.w_diag.size() != n || d.third_diag.size() != n) {
    throw ShapeMismatch("likelihood derivatives do not match the latent dimension");
  }
}

bool finite(const LikelihoodDerivatives& d) {
  return std::isfinite(d.log_lik) && d.c.allFinite() && d.w_diag.allFinite() &&
         d.third_diag.allFinite();
}

// B = I + W^1/2 K W^1/2
Matrix b_matrix(const Matrix& k, const Vector& sqrt_w) {
  Matrix bm = sqrt_w.asDiagonal() * k * sqrt_w.asDiagonal();
  bm.diagonal().array() += 1.0;
  return bm;
}

void check_curvature(const Vector& w, int iter) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) < 0.0) {
      throw NonPositiveCurvature("W[" + std::to_string(i) + "] = " + std::to_string(w(i)) +
                                 " < 0 at Newton iterate " + std::to_string(iter));
    }
  }
}

// Gradient rule, or a step at the rounding level of the Newton system: with
// very large W K the residual is rounding noise amplified by W.
bool newton_converged(const Vector& c, const Vector& a, const Vector& z, const Vector& z_prev,
                      double wk_scale, const NewtonOptions& options) {
  if ((c - a).lpNorm<Eigen::Infinity>() <= options.tolerance) return true;
  const double floor = std::max(1e-8, 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + wk_scale));
  return (z - z_prev).lpNorm<Eigen::Infinity>() <= floor * (1.0 + z.lpNorm<Eigen::Infinity>());
}

LaplaceFit fit_fast(const LatentGaussianModel& model, const ModelParameters& theta,
                    const Vector& z0, const NewtonOptions& options) {
  const Eigen::Index n = model.latent_dim();
  LaplaceFit fit;
  fit.theta = theta;
  fit.path = FactorizationPath::Fast;
  fit.k = model.kernel(theta.xi);
  const double k_scale = fit.k.cwiseAbs().maxCoeff();

  Vector z = z0;
  Vector z_prev = z0;
  Vector a = Vector::Zero(n);
  LikelihoodDerivatives d;
  int iter = 0;
  int converged_at = -1;
  for (;;) {
    d = model.likelihood(theta.eta, z);
    check_derivatives(d, n);
    if (!finite(d)) {
      throw MaxIterationsExceeded("non-finite likelihood derivatives at Newton iterate " +
                                  std::to_string(iter));
    }
    check_curvature(d.w_diag, iter);
    if (converged_at < 0 && iter >= 1 && newton_converged(d.c, a, z, z_prev, d.w_diag.lpNorm<Eigen::Infinity>() * k_scale, options)) {
      converged_at = iter;
    }
    if (converged_at >= 0 && iter - converged_at >= options.polish_steps) break;
    if (converged_at < 0 && iter >= options.max_iterations) {
      throw MaxIterationsExceeded("Newton did not converge in " +
                                  std::to_string(options.max_iterations) + " iterations");
    }
    const Vector sqrt_w = d.w_diag.array().sqrt();
    const LowerTriangularFactor l = cholesky(b_matrix(fit.k, sqrt_w));
    fit.b = d.w_diag.cwiseProduct(z) + d.c;
    const Vector rhs = sqrt_w.cwiseProduct(fit.k * fit.b);
    a = fit.b - sqrt_w.cwiseProduct(tri_solve(l, tri_solve(l, rhs), true));
    z_prev = z;
    z = fit.k * a;
    ++iter;
  }

  fit.n_iter = converged_at;
  fit.z_hat = z;
  fit.a = a;
  fit.log_lik = d.log_lik;
  fit.c = d.c;
  fit.w_diag = d.w_diag;
  fit.third_diag = d.third_diag;
  fit.log_prior = model.log_prior(theta.theta());

  const Vector sqrt_w = fit.w_diag.array().sqrt();
  fit.l = cholesky(b_matrix(fit.k, sqrt_w));
  fit.half_log_det_b = fit.l.half_log_det();

  // C = L^-1 W^1/2 K, A = K - C^T C
  const Matrix c_mat = tri_solve(fit.l, Matrix(sqrt_w.asDiagonal() * fit.k));
  fit.sigma = fit.k - c_mat.transpose() * c_mat;
  fit.sigma = (0.5 * (fit.sigma + fit.sigma.transpose())).eval();
  fit.sqrt_sigma = cholesky(fit.sigma);

  const Matrix l_inv_sw = tri_solve(fit.l, Matrix(sqrt_w.asDiagonal()));
  fit.r = l_inv_sw.transpose() * l_inv_sw;
  fit.s = 0.5 * fit.sigma.diagonal().cwiseProduct(fit.third_diag);
  fit.d = Matrix::Identity(n, n) - fit.r * fit.k;
  fit.omega = 0.5 * fit.a * fit.a.transpose() - 0.5 * fit.r +
              (fit.s - fit.r * (fit.k * fit.s)) * fit.c.transpose();
  return fit;
}

LaplaceFit fit_generic(const LatentGaussianModel& model, const ModelParameters& theta,
                       const Vector& z0, const NewtonOptions& options) {
  const Eigen::Index n = model.latent_dim();
  LaplaceFit fit;
  fit.theta = theta;
  fit.path = FactorizationPath::Generic;
  fit.k = model.kernel(theta.xi);
  const double k_scale = fit.k.cwiseAbs().maxCoeff();
  const LowerTriangularFactor k_chol = cholesky(fit.k);
  const Matrix k_inv = tri_solve(k_chol, tri_solve(k_chol, Matrix(Matrix::Identity(n, n))), true);

  Vector z = z0;
  Vector z_prev = z0;
  Vector a = Vector::Zero(n);
  LikelihoodDerivatives d;
  int iter = 0;
  int converged_at = -1;
  for (;;) {
    d = model.likelihood(theta.eta, z);
    check_derivatives(d, n);
    if (!finite(d)) {
      throw MaxIterationsExceeded("non-finite likelihood derivatives at Newton iterate " +
                                  std::to_string(iter));
    }
    if (converged_at < 0 && iter >= 1 && newton_converged(d.c, a, z, z_prev, d.w_diag.lpNorm<Eigen::Infinity>() * k_scale, options)) {
      converged_at = iter;
    }
    if (converged_at >= 0 && iter - converged_at >= options.polish_steps) break;
    if (converged_at < 0 && iter >= options.max_iterations) {
      throw MaxIterationsExceeded("Newton did not converge in " +
                                  std::to_string(options.max_iterations) + " iterations");
    }
    // Away from the mode K^-1 + W may be indefinite; fall back to the
    // clipped curvature there.
    Matrix h = k_inv;
    h.diagonal() += d.w_diag;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) {
      h = k_inv;
      h.diagonal() += d.w_diag.cwiseMax(0.0);
      llt.compute(h);
    }
    const Vector grad = d.c - k_inv * z;
    z_prev = z;
    z = z + llt.solve(grad);
    a = k_inv * z;
    fit.b = d.w_diag.cwiseProduct(z) + d.c;
    ++iter;
  }

  fit.n_iter = converged_at;
  fit.z_hat = z;
  fit.a = a;
  fit.log_lik = d.log_lik;
  fit.c = d.c;
  fit.w_diag = d.w_diag;
  fit.third_diag = d.third_diag;
  fit.log_prior = model.log_prior(theta.theta());

  Matrix h = k_inv;
  h.diagonal() += fit.w_diag;
  Eigen::LLT<Matrix> h_llt(h);
  if (h_llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("K^-1 + W is indefinite at the candidate mode");
  }
  const Matrix h_l = h_llt.matrixL();
  fit.half_log_det_b = k_chol.half_log_det() + h_l.diagonal().array().log().sum();
  fit.sigma = h_llt.solve(Matrix(Matrix::Identity(n, n)));
  fit.sigma = (0.5 * (fit.sigma + fit.sigma.transpose())).eval();
  fit.sqrt_sigma = cholesky(fit.sigma);
  fit.s = 0.5 * fit.sigma.diagonal().cwiseProduct(fit.third_diag);
  return fit;
}

void require_fast(const LaplaceFit& fit) {
  if (fit.path != FactorizationPath::Fast) {
    throw GenericPathUnsupported("gradients are only available on the fast factorization path");
  }
}

}  // namespace

LaplaceFit newton_fit(const LatentGaussianModel& model, const ModelParameters& theta,
                      const std::optional<Vector>& z0, FactorizationPath path,
                      const NewtonOptions& options) {
  const Eigen::Index n = model.latent_dim();
  if (theta.xi.size() != model.xi_dim() || theta.eta.size() != model.eta_dim()) {
    throw ShapeMismatch("theta does not match the model's [xi, eta] split");
  }
  const Vector start = z0 ? *z0 : Vector::Zero(n);
  if (start.size() != n) throw ShapeMismatch("initial latent has the wrong dimension");
  return path == FactorizationPath::Fast ? fit_fast(model, theta, start, options)
                                         : fit_generic(model, theta, start, options);
}

LaplaceFit fit_laplace(const LatentGaussianModel& model, const Vector& theta,
                       const std::optional<Vector>& z0, const NewtonOptions& options) {
  const ModelParameters params = ModelParameters::split(theta, model.xi_dim());
  if (!model.log_concave()) {
    return newton_fit(model, params, z0, FactorizationPath::Generic, options);
  }
  try {
    return newton_fit(model, params, z0, FactorizationPath::Fast, options);
  } catch (const NonPositiveCurvature&) {
    return newton_fit(model, params, z0, FactorizationPath::Generic, options);
  }
}

double adla_log_density(const LaplaceFit& fit) {
  return fit.log_prior - 0.5 * fit.z_hat.dot(fit.a) + fit.log_lik - fit.half_log_det_b;
}

Vector adla_gradient(const LatentGaussianModel& model, const LaplaceFit& fit) {
  require_fast(fit);
  const Vector& eta = fit.theta.eta;
  Vector grad(model.theta_dim());
  model.log_prior(fit.theta.theta(), &grad);
  if (model.xi_dim() > 0) grad.head(model.xi_dim()) += model.kernel_vjp(fit.theta.xi, fit.omega);
  if (model.eta_dim() > 0) {
    grad.tail(model.eta_dim()) += model.grad_eta_loglik(eta, fit.z_hat) +
                                  model.vjp_c(eta, fit.z_hat, fit.sigma * fit.s) -
                                  0.5 * model.vjp_w(eta, fit.z_hat, fit.sigma.diagonal());
  }
  return grad;
}

Vector LatentVjp::mode_theta() const {
  Vector out(xi_from_mode.size() + eta_from_mode.size());
  out << xi_from_mode, eta_from_mode;
  return out;
}

Vector LatentVjp::cov_theta() const {
  Vector out(xi_from_cov.size() + eta_from_cov.size());
  out << xi_from_cov, eta_from_cov;
  return out;
}

LatentVjp latent_vjps(const LatentGaussianModel& model, const LaplaceFit& fit, const Vector& v,
                      const Matrix& cov_tangent) {
  require_fast(fit);
  const Eigen::Index n = fit.latent_dim();
  if (v.size() != n || cov_tangent.rows() != n || cov_tangent.cols() != n) {
    throw ShapeMismatch("latent_vjps tangents do not match the latent dimension");
  }
  LatentVjp out;
  const Vector& xi = fit.theta.xi;
  const Vector& eta = fit.theta.eta;
  const Matrix ava = fit.sigma * cov_tangent * fit.sigma;
  // Sigma also moves through W(z_hat): d Sigma = Sigma diag(third * dz) Sigma
  const Vector via_mode = ava.diagonal().cwiseProduct(fit.third_diag);
  if (model.xi_dim() > 0) {
    out.xi_from_mode = model.kernel_vjp(xi, fit.d * v * fit.c.transpose());
    out.xi_from_cov = model.kernel_vjp(
        xi, fit.d * cov_tangent * fit.d.transpose() + fit.d * via_mode * fit.c.transpose());
  } else {
    out.xi_from_mode = out.xi_from_cov = Vector(0);
  }
  if (model.eta_dim() > 0) {
    out.eta_from_mode = model.vjp_c(eta, fit.z_hat, fit.sigma * v);
    out.eta_from_cov = model.vjp_w(eta, fit.z_hat, -ava.diagonal()) +
                       model.vjp_c(eta, fit.z_hat, fit.sigma * via_mode);
  } else {
    out.eta_from_mode = out.eta_from_cov = Vector(0);
  }
  return out;
}

Matrix transform_latent(const LaplaceFit& fit, const Matrix& eps) {
  if (eps.cols() != fit.latent_dim()) {
    throw ShapeMismatch("noise has " + std::to_string(eps.cols()) + " columns, latent dimension is " +
                        std::to_string(fit.latent_dim()));
  }
  Matrix z = eps * fit.sqrt_sigma.matrix().transpose();
  z.rowwise() += fit.z_hat.transpose();
  return z;
}

Matrix inverse_cdf_rows(const UnitCubePoints& u) {
  Matrix eps(u.n(), u.dim());
  for (Eigen::Index i = 0; i < u.n(); ++i) {
    for (Eigen::Index j = 0; j < u.dim(); ++j) eps(i, j) = inv_normal_cdf(u.points()(i, j));
  }
  return eps;
}

Matrix transform_latent(const LaplaceFit& fit, const UnitCubePoints& u) {
  return transform_latent(fit, inverse_cdf_rows(u));
}

}  // namespace adlis
