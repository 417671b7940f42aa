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

#include "adlis/estimators.hpp"
#include "adlis/model.hpp"
#include "adlis/numerics.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace adlis {

struct NutsConfig {
  double target_accept = 0.8;
  int max_tree_depth = 10;
  double divergence_threshold = 1000.0;
  int warmup_draws = 1000;
  int main_draws = 1000;
  std::uint64_t seed = 0;
  /// Keep the importance set of every `recovery_thin`-th draw (0 = none).
  int recovery_thin = 0;
  /// Warm-start Newton from the previous mode (marginalized methods).
  bool warm_start = false;

  void validate() const;
};

/// Log density and gradient at one point, plus whatever the estimator
/// produced there (kept so the selected draw can be recovered later).
struct TargetValue {
  double log_density = 0.0;
  Vector grad;
  std::shared_ptr<const EvaluatedTarget> detail;
};

/// Differentiable target. May throw adlis::Error or return non-finite
/// values; the sampler treats both as a divergence.
using TargetFn = std::function<TargetValue(const Vector&)>;

struct EvalCounters {
  std::uint64_t gradient_evals = 0;    // leapfrog steps
  std::uint64_t density_evals = 0;     // density-only evaluations (MH)
  std::uint64_t trajectories = 0;      // NUTS transitions
  std::uint64_t laplace_fits = 0;
};

struct ChainOutput {
  std::vector<std::string> names;
  Matrix draws;                 // main_draws x dim(theta), unconstrained
  Vector log_densities;
  std::vector<std::uint8_t> divergent;
  Vector wall_times;            // seconds since the chain started, warmup included
  Vector acceptance_stats;
  Eigen::VectorXi tree_depths;
  std::optional<Matrix> aux_trace;   // U (RQMC), vec(eps) (PM) or nu (base), one row per draw
  std::vector<std::optional<ImportanceSet>> recovery_inputs;

  double step_size = 0.0;
  Vector inv_metric;
  int warmup_divergences = 0;
  double mh_acceptance = 0.0;   // MwG only
  EvalCounters counters;

  int n_draws() const { return static_cast<int>(draws.rows()); }
  int n_divergent() const;
};

/// NUTS over a generic target (multinomial trajectory sampling, generalized
/// no-U-turn criterion, dual-averaging step size, diagonal metric).
ChainOutput nuts_sample(const TargetFn& target, const NutsConfig& config, const Vector& init);

/// Metropolis-within-Gibbs for RQMC: one NUTS transition of theta given U,
/// then one Metropolis step per coordinate of U with u ~ Uniform(-0.1, 0.1).
/// NUTS is tuned during warmup with U fixed at u0.
ChainOutput mwg_sample(const LatentGaussianModel& model, const EstimatorSpec& spec,
                       const NutsConfig& config, const Vector& theta0, const Vector& u0);

/// Unmarginalized target over [theta, nu] with z = chol(K(xi)) nu.
TargetFn base_target(const LatentGaussianModel& model);
/// Marginalized target for ADLA / IS / QMC over theta.
TargetFn marginal_target(const LatentGaussianModel& model, const EstimatorSpec& spec,
                         bool warm_start = false);
/// Pseudo-marginal target over [theta, vec(eps)], eps n x d_z column-major.
TargetFn pm_target(const LatentGaussianModel& model, int n);

/// Dispatches on spec.method: base/ADLA/IS/QMC/PM through NUTS, RQMC through
/// MwG. Draws hold theta only; PM and RQMC auxiliaries go to aux_trace.
ChainOutput run_inference(const LatentGaussianModel& model, const EstimatorSpec& spec,
                          const NutsConfig& config);

/// Runs `chains` independent chains concurrently; chain c uses seed
/// config.seed + c.
std::vector<ChainOutput> run_chains(const LatentGaussianModel& model, const EstimatorSpec& spec,
                                    const NutsConfig& config, int chains);

}  // namespace adlis
