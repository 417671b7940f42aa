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
#include "adlis/laplace.hpp"
#include "adlis/samplers.hpp"

#include <random>
#include <vector>

namespace adlis {

/// z = z_hat + sqrt(Sigma) nu with nu ~ N(0, I).
Vector laplace_recover(const LaplaceFit& fit, std::mt19937_64& rng);
/// Same with a given nu (replay).
Vector laplace_recover(const LaplaceFit& fit, const Vector& nu);

/// Index drawn with probability softmax(log_weights), Gumbel-max. Noise is
/// assigned in a canonical order of the points, so permuting the
/// (point, weight) pairs does not change which point is selected.
/// Throws DegenerateWeights when every weight is zero.
Eigen::Index sample_index(const ImportanceSet& set, std::mt19937_64& rng);

struct RecoveredLatent {
  Vector z;
  Eigen::Index index = 0;
  bool exact = false;  // true when the points were fresh draws
};

RecoveredLatent weighted_recover(const ImportanceSet& set, std::mt19937_64& rng);

struct RecoveredDraws {
  std::vector<int> draw_index;
  Matrix z;  // one row per recovered draw
  bool exact = true;
};

/// Weighted recovery over every draw of a chain that kept its importance set.
RecoveredDraws recover_chain(const ChainOutput& chain, std::uint64_t seed);

/// Latent draws of a base run: z = chol(K(xi)) nu for every stored draw.
Matrix recover_base(const LatentGaussianModel& model, const ChainOutput& chain);

}  // namespace adlis
