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

#include "adlis/model.hpp"
#include "adlis/numerics.hpp"

#include <optional>

namespace adlis {

/// Fast: diagonal W >= 0 and B = I + W^1/2 K W^1/2. Generic: dense
/// factorization of K^-1 + W, density only.
enum class FactorizationPath { Fast, Generic };

struct NewtonOptions {
  /// Stop once ||grad log pi(y|theta,z) - a||_inf <= tolerance, or once a
  /// Newton step is below the rounding level of the system (relative
  /// max(1e-8, 64 eps (1 + ||W||_inf ||K||_max))).
  double tolerance = 1e-4;
  int max_iterations = 100;
  /// Extra Newton steps taken after the stopping rule fires.
  int polish_steps = 1;
};

/// Everything the Newton solve leaves behind that densities and gradients
/// need. Immutable once returned.
struct LaplaceFit {
  ModelParameters theta;
  FactorizationPath path = FactorizationPath::Fast;
  int n_iter = 0;  // iterations until the stopping rule, polish excluded

  Vector z_hat;
  Matrix k;
  double log_prior = 0.0;
  double log_lik = 0.0;  // log pi(y | theta, z_hat)
  Vector c;              // grad_z log pi(y | theta, z_hat)
  Vector w_diag;
  Vector third_diag;
  LowerTriangularFactor l;  // chol(I + W^1/2 K W^1/2), fast path only
  Vector a;                 // K^-1 z_hat (z_hat = K a)
  Vector b;                 // W z + c from the last Newton step
  Matrix sigma;             // A = (K^-1 + W)^-1
  LowerTriangularFactor sqrt_sigma;
  double half_log_det_b = 0.0;  // 1/2 log|I + K W|

  // Fast-path adjoint quantities.
  Matrix r;      // W^1/2 B^-1 W^1/2
  Vector s;      // 1/2 diag(A) * third
  Matrix d;      // I - R K
  Matrix omega;  // 1/2 a a^T - 1/2 R + (s - R K s) c^T

  int latent_dim() const { return static_cast<int>(z_hat.size()); }
};

/// Newton iteration on the latent conditional. At least one iteration is
/// always executed. Throws MaxIterationsExceeded, NonPositiveCurvature (fast
/// path, W < 0 at an iterate) or NotPositiveDefinite (generic path, K^-1 + W
/// indefinite at the mode).
LaplaceFit newton_fit(const LatentGaussianModel& model, const ModelParameters& theta,
                      const std::optional<Vector>& z0 = std::nullopt,
                      FactorizationPath path = FactorizationPath::Fast,
                      const NewtonOptions& options = {});

/// Fast path for log-concave models, falling back to the generic path when
/// the model is not log-concave or the fast path reports negative curvature.
LaplaceFit fit_laplace(const LatentGaussianModel& model, const Vector& theta,
                       const std::optional<Vector>& z0 = std::nullopt,
                       const NewtonOptions& options = {});

/// log pi(theta) - 1/2 z_hat^T a + log pi(y | theta, z_hat) - 1/2 log|I + K W|.
double adla_log_density(const LaplaceFit& fit);

/// Gradient of adla_log_density over theta = [xi, eta]. Fast path only.
Vector adla_gradient(const LatentGaussianModel& model, const LaplaceFit& fit);

/// Contractions <v, d z_hat / d theta> and <V, d Sigma / d theta>, split by
/// which half of theta they land in.
struct LatentVjp {
  Vector xi_from_mode;
  Vector xi_from_cov;
  Vector eta_from_mode;
  Vector eta_from_cov;

  Vector mode_theta() const;
  Vector cov_theta() const;
};

LatentVjp latent_vjps(const LatentGaussianModel& model, const LaplaceFit& fit, const Vector& v,
                      const Matrix& cov_tangent);

/// z_i = z_hat + sqrt(Sigma) eps_i, one point per row of `eps` (n x d_z).
Matrix transform_latent(const LaplaceFit& fit, const Matrix& eps);
/// z_i = z_hat + sqrt(Sigma) Phi^-1(u_i).
Matrix transform_latent(const LaplaceFit& fit, const UnitCubePoints& u);

/// Elementwise Phi^-1 of a point set, one row per point.
Matrix inverse_cdf_rows(const UnitCubePoints& u);

}  // namespace adlis
