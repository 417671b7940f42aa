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

#include "adlis/recovery.hpp"

#include "adlis/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace adlis {

Vector laplace_recover(const LaplaceFit& fit, const Vector& nu) {
  if (nu.size() != fit.latent_dim()) throw ShapeMismatch("nu must have d_z entries");
  return fit.z_hat + fit.sqrt_sigma.matrix() * nu;
}

Vector laplace_recover(const LaplaceFit& fit, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector nu(fit.latent_dim());
  for (auto& x : nu) x = normal(rng);
  return laplace_recover(fit, nu);
}

Eigen::Index sample_index(const ImportanceSet& set, std::mt19937_64& rng) {
  const Eigen::Index n = set.n();
  if (n < 1) throw DegenerateWeights("empty importance set");
  if (set.z_points.rows() != n) throw ShapeMismatch("importance set has mismatched points and weights");
  if (!(logsumexp(set.log_weights) > -std::numeric_limits<double>::infinity())) {
    throw DegenerateWeights("all importance weights are zero");
  }
  if (n == 1) return 0;

  // canonical order: by weight, then lexicographically by point
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (set.log_weights(a) != set.log_weights(b)) return set.log_weights(a) < set.log_weights(b);
    for (Eigen::Index j = 0; j < set.z_points.cols(); ++j) {
      if (set.z_points(a, j) != set.z_points(b, j)) return set.z_points(a, j) < set.z_points(b, j);
    }
    return false;
  });

  std::uniform_real_distribution<double> unif;
  Eigen::Index best = order[0];
  double best_key = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i : order) {
    double u = unif(rng);
    while (u == 0.0) u = unif(rng);
    const double key = set.log_weights(i) - std::log(-std::log(u));
    if (key > best_key) {
      best_key = key;
      best = i;
    }
  }
  return best;
}

RecoveredLatent weighted_recover(const ImportanceSet& set, std::mt19937_64& rng) {
  RecoveredLatent out;
  out.index = sample_index(set, rng);
  out.z = set.z_points.row(out.index).transpose();
  out.exact = set.exact_recovery;
  return out;
}

RecoveredDraws recover_chain(const ChainOutput& chain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RecoveredDraws out;
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < chain.recovery_inputs.size(); ++i) {
    const auto& set = chain.recovery_inputs[i];
    if (!set) continue;
    const RecoveredLatent r = weighted_recover(*set, rng);
    out.draw_index.push_back(static_cast<int>(i));
    out.exact = out.exact && r.exact;
    rows.push_back(r.z);
  }
  if (rows.empty()) {
    out.exact = false;
    return out;
  }
  out.z.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.z.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

Matrix recover_base(const LatentGaussianModel& model, const ChainOutput& chain) {
  if (!chain.aux_trace || chain.aux_trace->cols() != model.latent_dim() ||
      chain.draws.cols() != model.theta_dim()) {
    throw ShapeMismatch("chain does not hold a base-method nu trace for " + model.name());
  }
  Matrix z(chain.draws.rows(), model.latent_dim());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const ModelParameters p = ModelParameters::split(chain.draws.row(i).transpose(), model.xi_dim());
    z.row(i) = (cholesky(model.kernel(p.xi)).matrix() * chain.aux_trace->row(i).transpose()).transpose();
  }
  return z;
}

}  // namespace adlis
