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

#include "adlis/numerics.hpp"

#include "adlis/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

namespace adlis {

namespace {
#include "sobol_directions.inc"

bool try_llt(const Matrix& m, Matrix& out) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return false;
  out = llt.matrixL();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (!(out(i, i) > 0.0) || !std::isfinite(out(i, i))) return false;
  }
  return true;
}

// tril with a halved diagonal
Matrix phi(const Matrix& x) {
  Matrix out = x.triangularView<Eigen::Lower>();
  out.diagonal() *= 0.5;
  return out;
}
}  // namespace

double LowerTriangularFactor::half_log_det() const {
  return lower_.diagonal().array().log().sum();
}

LowerTriangularFactor cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw ShapeMismatch("cholesky of a " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + " matrix");
  }
  if (!m.allFinite()) throw NotPositiveDefinite("matrix has non-finite entries");
  Matrix lower;
  if (try_llt(m, lower)) return {std::move(lower), 0.0};

  const double scale = m.diagonal().mean();
  if (scale > 0.0) {
    for (double delta = 1e-10; delta <= 1e-6 * 1.0000001; delta *= 10.0) {
      const double jitter = delta * scale;
      Matrix shifted = m;
      shifted.diagonal().array() += jitter;
      if (try_llt(shifted, lower)) return {std::move(lower), jitter};
    }
  }
  throw NotPositiveDefinite("Cholesky failed after maximal jitter (dim " +
                            std::to_string(m.rows()) + ")");
}

Matrix tri_solve(const LowerTriangularFactor& l, const Matrix& b, bool transposed) {
  if (b.rows() != l.dim()) {
    throw ShapeMismatch("tri_solve: factor is " + std::to_string(l.dim()) +
                        "-dimensional but rhs has " + std::to_string(b.rows()) + " rows");
  }
  if (transposed) return l.matrix().transpose().triangularView<Eigen::Upper>().solve(b);
  return l.matrix().triangularView<Eigen::Lower>().solve(b);
}

Vector tri_solve(const LowerTriangularFactor& l, const Vector& b, bool transposed) {
  return tri_solve(l, Matrix(b), transposed).col(0);
}

Matrix cholesky_backward(const LowerTriangularFactor& l, const Matrix& l_bar) {
  if (l_bar.rows() != l.dim() || l_bar.cols() != l.dim()) {
    throw ShapeMismatch("cholesky_backward: cotangent shape does not match factor");
  }
  const Matrix& lm = l.matrix();
  Matrix lower_bar = l_bar.triangularView<Eigen::Lower>();
  Matrix p = phi(lm.transpose() * lower_bar);
  // S = L^{-T} P L^{-1}
  Matrix tmp = lm.transpose().triangularView<Eigen::Upper>().solve(p);
  Matrix s = lm.transpose().triangularView<Eigen::Upper>().solve(tmp.transpose()).transpose();
  return 0.5 * (s + s.transpose());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_log_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

double inv_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("inv_normal_cdf requires u in (0,1), got " + std::to_string(u));
  }
  const double q = u - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
             45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
          133.14166789178437745) * r + 3.387132872796366608);
    const double den =
        (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
             21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
          42.313330701600911252) * r + 1.0);
    return q * num / den;
  }
  double r = std::sqrt(-std::log(q < 0.0 ? u : 1.0 - u));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
             1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
             0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
             0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
             7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
    val = num / den;
  }
  return q < 0.0 ? -val : val;
}

double logsumexp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

double logsumexp(const Vector& x) {
  return logsumexp(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

UnitCubePoints::UnitCubePoints(Matrix points) : points_(std::move(points)) {
  points_ = points_.array().max(kClampLow).min(kClampHigh).matrix();
}

int sobol_max_dim() { return kSobolMaxDim; }

UnitCubePoints sobol_points(int dim, int n) {
  if (dim < 1 || dim > kSobolMaxDim) {
    throw DimensionUnsupported("Sobol dimension " + std::to_string(dim) + " outside [1, " +
                               std::to_string(kSobolMaxDim) + "]");
  }
  if (n < 1) throw DomainError("sobol_points requires n >= 1");
  constexpr int kBits = 32;

  std::vector<std::array<std::uint32_t, kBits>> directions(dim);
  for (int j = 0; j < dim; ++j) {
    auto& v = directions[j];
    std::array<std::uint32_t, kBits + 1> m{};
    if (j == 0) {
      for (int k = 1; k <= kBits; ++k) m[k] = 1;
    } else {
      const std::uint32_t poly = kSobolPoly[j];
      const int degree = std::bit_width(poly) - 1;
      for (int k = 1; k <= degree; ++k) m[k] = kSobolInit[j][k - 1];
      for (int k = degree + 1; k <= kBits; ++k) {
        std::uint32_t value = m[k - degree] ^ (m[k - degree] << degree);
        for (int i = 1; i < degree; ++i) {
          const std::uint32_t coeff = (poly >> (degree - i)) & 1u;
          if (coeff) value ^= m[k - i] << i;
        }
        m[k] = value;
      }
    }
    for (int k = 1; k <= kBits; ++k) v[k - 1] = m[k] << (kBits - k);
  }

  Matrix out(n, dim);
  std::vector<std::uint32_t> state(dim, 0);
  constexpr double kScale = 0x1p-32;
  for (int i = 1; i <= n; ++i) {
    // Gray-code update: flip the direction at the lowest zero bit of i-1.
    const int c = std::countr_one(static_cast<std::uint32_t>(i - 1));
    for (int j = 0; j < dim; ++j) {
      state[j] ^= directions[j][c];
      out(i - 1, j) = state[j] * kScale;
    }
  }
  return UnitCubePoints(std::move(out));
}

UnitCubePoints shift_mod1(const UnitCubePoints& points, const Vector& shift) {
  if (shift.size() != points.dim()) {
    throw ShapeMismatch("shift_mod1: shift has " + std::to_string(shift.size()) +
                        " entries, points have dimension " + std::to_string(points.dim()));
  }
  Matrix out = points.points();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      double v = out(i, j) + shift(j);
      v -= std::floor(v);
      out(i, j) = v;
    }
  }
  return UnitCubePoints(std::move(out));
}

}  // namespace adlis
