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

#include "adlis/laplace.hpp"
#include "adlis/model.hpp"
#include "adlis/numerics.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace adlis {

/// Marginalization methods. `Base` samples the unmarginalized model.
enum class Method { Base, Adla, Is, Pm, Qmc, Rqmc };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Which estimator to build and its frozen auxiliaries.
struct EstimatorSpec {
  Method method = Method::Adla;
  int n = 1;
  Matrix fixed_eps;     // IS: n x d_z standard normal draws
  UnitCubePoints lds;   // QMC / RQMC: v_1..v_n
  std::uint64_t seed = 0;

  /// Builds the default auxiliaries: Sobol points for QMC/RQMC, standard
  /// normal draws from `seed` for IS, n forced to 1 for ADLA.
  static EstimatorSpec make(Method method, int n, int latent_dim, std::uint64_t seed = 0);
  /// Throws InvalidEstimatorSpec when the auxiliaries do not fit.
  void validate(int latent_dim) const;
};

/// Latent points with their log importance weights
/// log w_i = log pi(theta) + log pi(z_i|theta) + log pi(y|theta,z_i) - log pihat(z_i|theta,y).
struct ImportanceSet {
  Matrix z_points;  // n x d_z
  Vector log_weights;
  /// True when the points are independent draws from the Laplace
  /// approximation, so weighted recovery is exact.
  bool exact_recovery = false;

  Eigen::Index n() const { return log_weights.size(); }
  /// softmax(log_weights)
  Vector probabilities() const;
  /// (sum w)^2 / (n sum w^2)
  double normalized_ess() const;
};

struct EvaluatedTarget {
  double log_density = 0.0;
  Vector grad_theta;
  std::optional<Matrix> grad_aux;  // PM: gradient over eps (n x d_z)
  ImportanceSet importance_set;
  std::shared_ptr<const LaplaceFit> fit;
};

/// Importance-sampling core shared by every estimator: weights of
/// z_i = z_hat + sqrt(Sigma) eps_i and, optionally, their theta and eps
/// gradients. The result's log_density is logsumexp(log w) - log n.
EvaluatedTarget evaluate_importance(const LatentGaussianModel& model,
                                    std::shared_ptr<const LaplaceFit> fit, const Matrix& eps,
                                    bool with_gradient, bool with_eps_gradient = false);

EvaluatedTarget eval_adla(const LatentGaussianModel& model, const Vector& theta,
                          bool with_gradient = true);
EvaluatedTarget eval_is(const LatentGaussianModel& model, const Vector& theta,
                        const EstimatorSpec& spec, bool with_gradient = true);
/// Pseudo-marginal target over (theta, eps): adds sum_i log phi(eps_i).
EvaluatedTarget eval_pm(const LatentGaussianModel& model, const Vector& theta, const Matrix& eps,
                        bool with_gradient = true);
EvaluatedTarget eval_qmc(const LatentGaussianModel& model, const Vector& theta,
                         const EstimatorSpec& spec, bool with_gradient = true);
/// Randomized QMC with shift U in [0,1)^d_z. Gradient is over theta only.
EvaluatedTarget eval_rqmc(const LatentGaussianModel& model, const Vector& theta,
                          const EstimatorSpec& spec, const Vector& shift,
                          bool with_gradient = true);
/// Same as eval_rqmc but reuses an existing Laplace fit (fixed theta).
EvaluatedTarget eval_rqmc(const LatentGaussianModel& model, std::shared_ptr<const LaplaceFit> fit,
                          const EstimatorSpec& spec, const Vector& shift,
                          bool with_gradient = false);

/// Dispatches on spec.method for the fixed-auxiliary methods
/// (ADLA, IS, QMC). PM and RQMC need their auxiliary state explicitly.
EvaluatedTarget eval_estimator(const LatentGaussianModel& model, const Vector& theta,
                               const EstimatorSpec& spec, bool with_gradient = true);

}  // namespace adlis
