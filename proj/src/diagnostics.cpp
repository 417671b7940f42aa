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

#include "adlis/diagnostics.hpp"

#include "adlis/errors.hpp"
#include "adlis/estimators.hpp"
#include "adlis/laplace.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>

namespace adlis {

EssResult ess(const Vector& series) {
  const Eigen::Index n = series.size();
  if (n < 10) throw TooShort("ESS needs at least 10 points, got " + std::to_string(n));
  const double mean = series.mean();
  const Vector c = series.array() - mean;
  const double gamma0 = c.squaredNorm() / static_cast<double>(n);
  if (!(gamma0 > 0.0)) return {0.0, true};

  auto rho = [&](Eigen::Index lag) {
    return c.head(n - lag).dot(c.tail(n - lag)) / static_cast<double>(n) / gamma0;
  };
  // Geyer: sum pairs Gamma_k = rho_2k + rho_2k+1 while positive, monotone.
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  const double value = static_cast<double>(n) / std::max(tau, 1e-12);
  return {std::min(value, static_cast<double>(n)), false};
}

double mcse_mean(const Vector& series) {
  const EssResult e = ess(series);
  if (e.degenerate) return 0.0;
  const double mean = series.mean();
  const double var = (series.array() - mean).square().sum() / static_cast<double>(series.size() - 1);
  return std::sqrt(var / e.ess);
}

double integrate_real_line(const std::function<double(double)>& f, double center, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double err_lo = 0.0, err_hi = 0.0, l1_lo = 0.0, l1_hi = 0.0;
  const double lo = gauss_kronrod<double, 61>::integrate(f, -inf, center, 15, tol * 1e-2, &err_lo, &l1_lo);
  const double hi = gauss_kronrod<double, 61>::integrate(f, center, inf, 15, tol * 1e-2, &err_hi, &l1_hi);
  const double total = lo + hi;
  const double err = err_lo + err_hi;
  if (!std::isfinite(total) || err > tol * std::max(1.0, l1_lo + l1_hi)) {
    throw NonConvergentQuadrature("error estimate " + std::to_string(err) + " exceeds tolerance " +
                                  std::to_string(tol));
  }
  return total;
}

namespace {

struct LatentIntegrand {
  const LatentGaussianModel& model;
  ModelParameters p;
  double k = 1.0;
  double center = 0.0;
  double offset = 0.0;

  double log_joint(double z) const {
    return -0.5 * z * z / k - 0.5 * std::log(2.0 * std::numbers::pi * k) +
           model.log_likelihood(p.eta, Vector::Constant(1, z));
  }
  double operator()(double z) const {
    const double v = std::exp(log_joint(z) - offset);
    return std::isfinite(v) ? v : 0.0;
  }
};

LatentIntegrand make_integrand(const LatentGaussianModel& model, const Vector& theta) {
  if (model.latent_dim() != 1) {
    throw DimensionUnsupported("quadrature oracles need a 1-D latent model; " + model.name() + " has " +
                               std::to_string(model.latent_dim()));
  }
  LatentIntegrand g{model, ModelParameters::split(theta, model.xi_dim())};
  g.k = model.kernel(g.p.xi)(0, 0);
  g.center = fit_laplace(model, theta).z_hat(0);
  g.offset = g.log_joint(g.center);
  return g;
}

}  // namespace

QuadratureResult quadrature_marginal(const LatentGaussianModel& model, const Vector& theta, double tol) {
  const LatentIntegrand g = make_integrand(model, theta);
  const double integral = integrate_real_line(std::cref(g), g.center, tol);
  QuadratureResult out;
  out.log_value = model.log_prior(theta) + g.offset + std::log(integral);
  out.value = std::exp(out.log_value);
  out.error_estimate = tol * integral;
  return out;
}

double latent_posterior_cdf(const LatentGaussianModel& model, const Vector& theta, double z, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  const LatentIntegrand g = make_integrand(model, theta);
  const double total = integrate_real_line(std::cref(g), g.center, tol);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double err = 0.0;
  double part;
  if (z <= g.center) {
    part = gauss_kronrod<double, 61>::integrate(std::cref(g), -inf, z, 15, tol * 1e-2, &err);
  } else {
    part = total - gauss_kronrod<double, 61>::integrate(std::cref(g), z, inf, 15, tol * 1e-2, &err);
  }
  return std::clamp(part / total, 0.0, 1.0);
}

ThetaGrid theta_posterior_grid(const LatentGaussianModel& model, double lo, double hi, int points,
                               double tol) {
  if (model.theta_dim() != 1) {
    throw DimensionUnsupported("theta grid needs a scalar hyperparameter; " + model.name() + " has " +
                               std::to_string(model.theta_dim()));
  }
  return theta_posterior_grid(model, Vector::Zero(1), 0, lo, hi, points, tol);
}

ThetaGrid theta_posterior_grid(const LatentGaussianModel& model, const Vector& base, int index, double lo,
                               double hi, int points, double tol) {
  if (base.size() != model.theta_dim()) throw ShapeMismatch("base theta has the wrong length");
  if (index < 0 || index >= model.theta_dim()) throw DomainError("grid index out of range");
  if (points < 2 || !(hi > lo)) throw DomainError("theta grid needs points >= 2 and hi > lo");
  ThetaGrid g;
  g.theta = Vector::LinSpaced(points, lo, hi);
  g.log_joint.resize(points);
  Vector theta = base;
  for (int i = 0; i < points; ++i) {
    theta(index) = g.theta(i);
    g.log_joint(i) = quadrature_marginal(model, theta, tol).log_value;
  }
  const double m = g.log_joint.maxCoeff();
  const Vector unnorm = (g.log_joint.array() - m).exp();
  const double h = (hi - lo) / (points - 1);
  g.cdf.resize(points);
  g.cdf(0) = 0.0;
  for (int i = 1; i < points; ++i) g.cdf(i) = g.cdf(i - 1) + 0.5 * h * (unnorm(i - 1) + unnorm(i));
  const double z = g.cdf(points - 1);
  g.density = unnorm / z;
  g.cdf /= z;
  return g;
}

UGrid u_grid_scan(const LatentGaussianModel& model, const Vector& theta, int n, int grid_size) {
  if (model.latent_dim() != 1) throw DimensionUnsupported("U-grid scans need a 1-D latent model");
  if (grid_size < 3) throw DomainError("grid_size must be >= 3");
  const EstimatorSpec spec = EstimatorSpec::make(Method::Rqmc, n, 1);
  auto fit = std::make_shared<const LaplaceFit>(fit_laplace(model, theta));
  UGrid g;
  g.u.resize(grid_size);
  g.log_density.resize(grid_size);
  for (int k = 0; k < grid_size; ++k) {
    g.u(k) = static_cast<double>(k) / grid_size;
    g.log_density(k) = eval_rqmc(model, fit, spec, Vector::Constant(1, g.u(k)), false).log_density;
  }
  const double m = g.log_density.maxCoeff();
  const Vector vals = (g.log_density.array() - m).exp();
  // periodic trapezoid on a uniform grid
  g.density = vals / vals.mean();
  g.max_min_ratio = vals.maxCoeff() / vals.minCoeff();

  std::vector<double> change(grid_size);
  for (int k = 0; k < grid_size; ++k) {
    const double a = vals(k), b = vals((k + 1) % grid_size);
    change[k] = std::fabs(b - a) / std::max(a, b);
  }
  std::vector<double> sorted = change;
  std::nth_element(sorted.begin(), sorted.begin() + grid_size / 2, sorted.end());
  const double threshold = std::max(10.0 * sorted[grid_size / 2], 1e-8);
  std::vector<bool> flag(grid_size);
  for (int k = 0; k < grid_size; ++k) flag[k] = change[k] > threshold;
  if (std::all_of(flag.begin(), flag.end(), [](bool f) { return f; })) return g;
  // start scanning just after an unflagged cell so runs do not straddle the wrap
  int start = 0;
  while (flag[start]) ++start;
  for (int i = 1; i <= grid_size; ++i) {
    const int k = (start + i) % grid_size;
    const int prev = (k + grid_size - 1) % grid_size;
    if (flag[k] && !flag[prev]) {
      int end = k;
      while (flag[(end + 1) % grid_size]) end = (end + 1) % grid_size;
      const int len = (end - k + grid_size) % grid_size + 1;
      double loc = (k + 0.5 * len) / grid_size;
      g.jumps.push_back(loc - std::floor(loc));
    }
  }
  std::sort(g.jumps.begin(), g.jumps.end());
  return g;
}

Matrix error_trace(const ChainOutput& chain, const Vector& truth) {
  if (truth.size() != chain.draws.cols()) {
    throw ShapeMismatch("truth has " + std::to_string(truth.size()) + " entries, chain has " +
                        std::to_string(chain.draws.cols()) + " parameters");
  }
  const Eigen::Index m = chain.draws.rows();
  Matrix out(m, truth.size() + 1);
  Vector sum = Vector::Zero(truth.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    sum += chain.draws.row(i).transpose();
    out(i, 0) = chain.wall_times.size() == m ? chain.wall_times(i) : static_cast<double>(i);
    out.row(i).tail(truth.size()) = (sum / static_cast<double>(i + 1) - truth).cwiseAbs().transpose();
  }
  return out;
}

ChainOutput concatenate(const std::vector<ChainOutput>& chains) {
  ChainOutput out;
  if (chains.empty()) return out;
  out.names = chains.front().names;
  Eigen::Index rows = 0;
  for (const auto& c : chains) {
    if (c.draws.cols() != chains.front().draws.cols()) throw ShapeMismatch("chains have different widths");
    rows += c.draws.rows();
  }
  out.draws.resize(rows, chains.front().draws.cols());
  out.log_densities.resize(rows);
  out.wall_times.resize(rows);
  out.acceptance_stats.resize(rows);
  Eigen::Index r = 0;
  double clock = 0.0;
  for (const auto& c : chains) {
    const Eigen::Index m = c.draws.rows();
    out.draws.middleRows(r, m) = c.draws;
    out.log_densities.segment(r, m) = c.log_densities;
    out.acceptance_stats.segment(r, m) = c.acceptance_stats;
    out.wall_times.segment(r, m) = c.wall_times.array() + clock;
    if (m > 0) clock += c.wall_times(m - 1);
    out.divergent.insert(out.divergent.end(), c.divergent.begin(), c.divergent.end());
    out.warmup_divergences += c.warmup_divergences;
    r += m;
  }
  return out;
}

std::vector<EssRow> ess_summary(const std::vector<ChainOutput>& chains) {
  std::vector<EssRow> rows;
  if (chains.empty()) return rows;
  const Eigen::Index p = chains.front().draws.cols();
  double minutes = 0.0;
  for (const auto& c : chains) {
    if (c.wall_times.size() > 0) minutes += c.wall_times(c.wall_times.size() - 1) / 60.0;
  }
  const ChainOutput pooled = concatenate(chains);
  for (Eigen::Index j = 0; j < p; ++j) {
    EssRow row;
    row.parameter = j < static_cast<Eigen::Index>(pooled.names.size()) ? pooled.names[j] : "p" + std::to_string(j);
    double var_sum = 0.0;
    for (const auto& c : chains) {
      const EssResult e = ess(c.draws.col(j));
      row.ess += e.ess;
    }
    const Vector all = pooled.draws.col(j);
    row.mean = all.mean();
    var_sum = (all.array() - row.mean).square().sum() / std::max<Eigen::Index>(1, all.size() - 1);
    row.mcse = row.ess > 0.0 ? std::sqrt(var_sum / row.ess) : 0.0;
    row.ess_per_minute = minutes > 0.0 ? row.ess / minutes : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void write_error_trace_csv(std::ostream& os, const Matrix& trace, const std::vector<std::string>& names) {
  os << "time_s";
  for (const auto& n : names) os << "," << n;
  os << "\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < trace.rows(); ++i) {
    for (Eigen::Index j = 0; j < trace.cols(); ++j) os << (j ? "," : "") << trace(i, j);
    os << "\n";
  }
}

void write_ugrid_csv(std::ostream& os, const UGrid& grid) {
  os << "U,density\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < grid.u.size(); ++k) os << grid.u(k) << "," << grid.density(k) << "\n";
}

void write_ess_csv(std::ostream& os, const std::vector<EssRow>& rows) {
  os << "parameter,ess,ess_per_min,mean,mcse\n" << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.parameter << "," << r.ess << "," << r.ess_per_minute << "," << r.mean << "," << r.mcse << "\n";
  }
}

}  // namespace adlis
