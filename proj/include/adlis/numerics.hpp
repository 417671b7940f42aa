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

#include <Eigen/Dense>

#include <span>

namespace adlis {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense lower-triangular Cholesky factor L with L L^T = M (+ jitter).
class LowerTriangularFactor {
 public:
  LowerTriangularFactor() = default;
  LowerTriangularFactor(Matrix lower, double jitter)
      : lower_(std::move(lower)), jitter_(jitter) {}

  Eigen::Index dim() const { return lower_.rows(); }
  const Matrix& matrix() const { return lower_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return lower_(i, j); }
  /// Diagonal jitter that was added to the source matrix (0 if none).
  double jitter() const { return jitter_; }
  /// sum_i log L_ii, i.e. half the log determinant of L L^T.
  double half_log_det() const;
  Matrix reconstruct() const { return lower_ * lower_.transpose(); }

 private:
  Matrix lower_;
  double jitter_ = 0.0;
};

/// Cholesky factorization with jitter escalation: on failure adds
/// delta * mean(diag(M)) * I for delta = 1e-10, 1e-9, ..., 1e-6.
/// Throws NotPositiveDefinite when every attempt fails.
LowerTriangularFactor cholesky(const Matrix& m);

/// Solves L X = B (or L^T X = B when `transposed`).
Matrix tri_solve(const LowerTriangularFactor& l, const Matrix& b, bool transposed = false);
Vector tri_solve(const LowerTriangularFactor& l, const Vector& b, bool transposed = false);

/// Reverse-mode contraction through A = L L^T. Given the cotangent of the
/// lower factor, returns the symmetric cotangent of A such that
/// <A_bar, dA> = <L_bar, dL> for every symmetric perturbation dA.
Matrix cholesky_backward(const LowerTriangularFactor& l, const Matrix& l_bar);

double normal_cdf(double x);
double normal_log_pdf(double x);

/// Inverse standard normal CDF (Wichura AS241, PPND16). Throws DomainError
/// outside the open interval (0, 1).
double inv_normal_cdf(double u);

/// Numerically stable log(sum(exp(x))). Returns -inf for an empty span or
/// when every entry is -inf.
double logsumexp(std::span<const double> x);
double logsumexp(const Vector& x);

/// n x dim points in the open unit cube, one point per row.
class UnitCubePoints {
 public:
  UnitCubePoints() = default;
  explicit UnitCubePoints(Matrix points);

  Eigen::Index n() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  Eigen::VectorXd row(Eigen::Index i) const { return points_.row(i).transpose(); }

  /// Lower/upper clamp applied to every coordinate.
  static constexpr double kClampLow = 0x1p-32;
  static constexpr double kClampHigh = 1.0 - 0x1p-32;

 private:
  Matrix points_;
};

/// Highest dimension supported by the embedded direction-number table.
int sobol_max_dim();

/// Points 1..n of the unscrambled Sobol sequence in Gray-code order
/// (index 0, the origin, is skipped). Throws DimensionUnsupported.
UnitCubePoints sobol_points(int dim, int n);

/// Elementwise (v + shift) mod 1, clamped into [2^-32, 1 - 2^-32].
UnitCubePoints shift_mod1(const UnitCubePoints& points, const Vector& shift);

}  // namespace adlis
