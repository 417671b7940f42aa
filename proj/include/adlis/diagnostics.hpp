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
#include "adlis/samplers.hpp"

#include <functional>
#include <ostream>
#include <vector>

namespace adlis {

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // zero variance
};

/// Autocovariance ESS with Geyer's initial monotone sequence, capped at the
/// series length. Throws TooShort below 10 points.
EssResult ess(const Vector& series);

/// sd / sqrt(ESS); infinite for degenerate series.
double mcse_mean(const Vector& series);

/// Adaptive Gauss-Kronrod over (-inf, inf) split at `center`. Throws
/// NonConvergentQuadrature when the error estimate exceeds tol.
double integrate_real_line(const std::function<double(double)>& f, double center = 0.0,
                           double tol = 1e-10);

struct QuadratureResult {
  double log_value = 0.0;  // log pi(theta, y)
  double value = 0.0;      // pi(theta, y), may underflow
  double error_estimate = 0.0;
};

/// log pi(theta) + log int pi(z | theta) pi(y | theta, z) dz for d_z = 1.
/// Throws DimensionUnsupported for other latent dimensions.
QuadratureResult quadrature_marginal(const LatentGaussianModel& model, const Vector& theta,
                                     double tol = 1e-10);

/// CDF of pi(z | theta, y) at z for d_z = 1.
double latent_posterior_cdf(const LatentGaussianModel& model, const Vector& theta, double z,
                            double tol = 1e-10);

struct ThetaGrid {
  Vector theta;
  Vector log_joint;  // log pi(theta, y)
  Vector density;    // pi(theta | y), trapezoid-normalized on the grid
  Vector cdf;        // cumulative trapezoid
};

/// Quadrature posterior of a scalar theta over an even grid on [lo, hi].
ThetaGrid theta_posterior_grid(const LatentGaussianModel& model, double lo, double hi, int points,
                               double tol = 1e-10);
/// Conditional version: coordinate `index` varies, the rest stay at `base`.
ThetaGrid theta_posterior_grid(const LatentGaussianModel& model, const Vector& base, int index, double lo,
                               double hi, int points, double tol = 1e-10);

struct UGrid {
  Vector u;             // U_k = k / G
  Vector log_density;   // log pi_hat^RQMC(U | theta, y), unnormalized
  Vector density;       // normalized on [0,1) (periodic trapezoid)
  std::vector<double> jumps;  // locations of detected discontinuities
  double max_min_ratio = 1.0;
};

/// pi_hat^RQMC over a uniform U-grid for a 1-D latent model. A jump is a run
/// of adjacent cells whose relative change exceeds 10x the median change.
UGrid u_grid_scan(const LatentGaussianModel& model, const Vector& theta, int n, int grid_size = 5000);

/// |running mean - truth| per parameter; column 0 is wall time.
Matrix error_trace(const ChainOutput& chain, const Vector& truth);

/// Concatenates draws, log densities, divergences and wall times (the
/// second chain's clock continues from the first's).
ChainOutput concatenate(const std::vector<ChainOutput>& chains);

struct EssRow {
  std::string parameter;
  double ess = 0.0;
  double ess_per_minute = 0.0;
  double mean = 0.0;
  double mcse = 0.0;
};

/// Per-parameter ESS summary over pooled chains (ESS summed across chains).
std::vector<EssRow> ess_summary(const std::vector<ChainOutput>& chains);

void write_error_trace_csv(std::ostream& os, const Matrix& trace, const std::vector<std::string>& names);
void write_ugrid_csv(std::ostream& os, const UGrid& grid);
void write_ess_csv(std::ostream& os, const std::vector<EssRow>& rows);

}  // namespace adlis
