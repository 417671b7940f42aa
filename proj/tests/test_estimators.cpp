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

#include "adlis/errors.hpp"
#include "adlis/estimators.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace adlis;

namespace {

Vector at(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// pi(y | sigma) for one latent z ~ N(0, sigma^2), y ~ Poisson(e^z).
double poisson_evidence(int y, double sigma) {
  return testing::simpson(
      [&](double z) {
        const double lp = -0.5 * z * z / (sigma * sigma) - std::log(sigma) -
                          0.5 * std::log(2 * std::numbers::pi) + y * z - std::exp(z) -
                          std::lgamma(y + 1.0);
        return std::exp(lp);
      },
      -40.0, 12.0, 200000);
}

double conjugate_marginal(const LatentGaussianModel& m, const Vector& theta) {
  const Dataset data = m.dataset();
  Matrix cov = testing::se_kernel(data.rows.col(1), std::exp(theta(0)), std::exp(theta(1)));
  cov.diagonal().array() += std::exp(2 * theta(2));
  return testing::gaussian_log_density(data.rows.col(2), cov) + m.log_prior(theta);
}

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - m) * (v - m);
  var /= static_cast<double>(x.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(x.size()))};
}

}  // namespace

TEST_CASE("spec construction and validation") {
  const EstimatorSpec adla = EstimatorSpec::make(Method::Adla, 8, 3);
  CHECK(adla.n == 1);
  const EstimatorSpec is = EstimatorSpec::make(Method::Is, 4, 3, 7);
  CHECK(is.fixed_eps.rows() == 4);
  CHECK(is.fixed_eps.cols() == 3);
  CHECK(EstimatorSpec::make(Method::Is, 4, 3, 7).fixed_eps == is.fixed_eps);
  const EstimatorSpec qmc = EstimatorSpec::make(Method::Qmc, 16, 3);
  CHECK(qmc.lds.n() == 16);
  CHECK_NOTHROW(qmc.validate(3));
  CHECK_THROWS_AS(qmc.validate(4), InvalidEstimatorSpec);
  CHECK_THROWS_AS(is.validate(2), InvalidEstimatorSpec);
  CHECK_THROWS_AS(EstimatorSpec::make(Method::Qmc, 0, 3), InvalidEstimatorSpec);
  EstimatorSpec bad = adla;
  bad.n = 2;
  CHECK_THROWS_AS(bad.validate(3), InvalidEstimatorSpec);

  CHECK(parse_method("rqmc") == Method::Rqmc);
  CHECK(to_string(Method::Pm) == "pm");
  CHECK_THROWS_AS(parse_method("mcmc"), InvalidEstimatorSpec);
}

TEST_CASE("single-sample collapse to ADLA") {
  auto m = gp_poisson_model(10, 1);
  const Vector theta = at({0.1, -0.2});
  const EvaluatedTarget adla = eval_adla(*m, theta);
  CHECK(adla.importance_set.log_weights(0) == adla.log_density);
  CHECK(adla.log_density == adla_log_density(*adla.fit));

  EstimatorSpec is = EstimatorSpec::make(Method::Is, 1, 10);
  is.fixed_eps.setZero();
  const EvaluatedTarget e_is = eval_is(*m, theta, is);
  CHECK(e_is.log_density == adla.log_density);

  EstimatorSpec qmc = EstimatorSpec::make(Method::Qmc, 1, 10);
  qmc.lds = UnitCubePoints(Matrix::Constant(1, 10, 0.5));
  const EvaluatedTarget e_qmc = eval_qmc(*m, theta, qmc);
  CHECK(e_qmc.log_density == adla.log_density);

  CHECK(testing::relative_error(e_is.grad_theta, adla.grad_theta) < 1e-12);
  CHECK(testing::relative_error(e_qmc.grad_theta, adla.grad_theta) < 1e-12);

  const EvaluatedTarget pm = eval_pm(*m, theta, Matrix::Zero(1, 10));
  CHECK(pm.log_density == doctest::Approx(adla.log_density - 5.0 * std::log(2 * std::numbers::pi)).epsilon(1e-14));

  const EvaluatedTarget r0 = eval_rqmc(*m, theta, qmc, Vector::Zero(10));
  CHECK(r0.log_density == e_qmc.log_density);
}

TEST_CASE("gaussian exactness for every estimator") {
  auto m = gaussian_conjugate_model(6, 0.5, 2, true);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif;
  const Vector theta = at({0.3, -0.2, std::log(0.45)});
  const double exact = conjugate_marginal(*m, theta);
  CHECK(std::fabs(eval_adla(*m, theta).log_density - exact) < 1e-8);
  for (int n : {1, 4, 16}) {
    CAPTURE(n);
    const EstimatorSpec is = EstimatorSpec::make(Method::Is, n, 6, n);
    const EvaluatedTarget e = eval_is(*m, theta, is);
    CHECK(std::fabs(e.log_density - exact) < 1e-8);
    CHECK(e.importance_set.normalized_ess() == doctest::Approx(1.0).epsilon(1e-12));
    const Vector lw = e.importance_set.log_weights;
    CHECK(lw.maxCoeff() - lw.minCoeff() < 1e-9);

    const EstimatorSpec qmc = EstimatorSpec::make(Method::Qmc, n, 6);
    CHECK(std::fabs(eval_qmc(*m, theta, qmc).log_density - exact) < 1e-8);
    Vector u(6);
    for (auto& x : u) x = unif(rng);
    CHECK(std::fabs(eval_rqmc(*m, theta, qmc, u).log_density - exact) < 1e-8);

    const Matrix eps = testing::random_matrix(n, 6, rng);
    const double log_phi = -0.5 * eps.squaredNorm() - 0.5 * eps.size() * std::log(2 * std::numbers::pi);
    CHECK(std::fabs(eval_pm(*m, theta, eps).log_density - log_phi - exact) < 1e-8);
  }
}

TEST_CASE("estimator gradients vs finite differences") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::vector<ModelPtr> models = {gp_poisson_model(10, 1), mixed_effects_nb_model(2, 4, 3),
                                  gaussian_conjugate_model(5, 0.5, 4, true), scalar_poisson_model(2)};
  for (const ModelPtr& m : models) {
    CAPTURE(m->name());
    const int dz = m->latent_dim();
    for (int rep = 0; rep < 3; ++rep) {
      Vector theta = m->initial_theta();
      for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) += 0.3 * normal(rng);
      const int n = 1 + rep * 3;

      const EstimatorSpec is = EstimatorSpec::make(Method::Is, n, dz, rep);
      const Vector g_is = eval_is(*m, theta, is).grad_theta;
      const Vector fd_is = testing::central_difference(
          [&](const Vector& t) { return eval_is(*m, t, is, false).log_density; }, theta);
      CHECK(testing::relative_error(g_is, fd_is) < 1e-5);

      const EstimatorSpec qmc = EstimatorSpec::make(Method::Qmc, n, dz);
      const Vector g_q = eval_qmc(*m, theta, qmc).grad_theta;
      const Vector fd_q = testing::central_difference(
          [&](const Vector& t) { return eval_qmc(*m, t, qmc, false).log_density; }, theta);
      CHECK(testing::relative_error(g_q, fd_q) < 1e-5);

      Vector u(dz);
      for (auto& x : u) x = unif(rng);
      const Vector g_r = eval_rqmc(*m, theta, qmc, u).grad_theta;
      const Vector fd_r = testing::central_difference(
          [&](const Vector& t) { return eval_rqmc(*m, t, qmc, u, false).log_density; }, theta);
      CHECK(testing::relative_error(g_r, fd_r) < 1e-5);

      const Matrix eps = testing::random_matrix(n, dz, rng);
      const EvaluatedTarget pm = eval_pm(*m, theta, eps);
      const Vector fd_pm = testing::central_difference(
          [&](const Vector& t) { return eval_pm(*m, t, eps, false).log_density; }, theta);
      CHECK(testing::relative_error(pm.grad_theta, fd_pm) < 1e-5);
      REQUIRE(pm.grad_aux.has_value());
      const Vector flat = Eigen::Map<const Vector>(eps.data(), eps.size());
      const Vector fd_eps = testing::central_difference(
          [&](const Vector& e) {
            return eval_pm(*m, theta, Eigen::Map<const Matrix>(e.data(), n, dz), false).log_density;
          },
          flat);
      const Vector g_eps = Eigen::Map<const Vector>(pm.grad_aux->data(), pm.grad_aux->size());
      CHECK(testing::relative_error(g_eps, fd_eps) < 1e-5);
    }
  }
}

TEST_CASE("PM eps gradient on gp-poisson, n = 4") {
  auto m = gp_poisson_model(10, 1);
  std::mt19937_64 rng(1);
  const Matrix eps = testing::random_matrix(4, 10, rng);
  const Vector theta = m->initial_theta();
  const EvaluatedTarget pm = eval_pm(*m, theta, eps);
  const Vector flat = Eigen::Map<const Vector>(eps.data(), eps.size());
  const Vector fd = testing::central_difference(
      [&](const Vector& e) { return eval_pm(*m, theta, Eigen::Map<const Matrix>(e.data(), 4, 10), false).log_density; },
      flat);
  CHECK(testing::relative_error(Eigen::Map<const Vector>(pm.grad_aux->data(), 40), fd) < 1e-5);
}

TEST_CASE("unbiasedness on the scalar poisson model") {
  auto m = scalar_poisson_model(0);
  const Vector theta = at({0.0});
  const double truth = poisson_evidence(0, 1.0);
  const double lp = m->log_prior(theta);
  const int reps = 100000;
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  auto fit = std::make_shared<const LaplaceFit>(fit_laplace(*m, theta));

  for (int n : {1, 4}) {
    std::vector<double> vals(reps);
    for (int r = 0; r < reps; ++r) {
      Matrix eps(n, 1);
      for (int i = 0; i < n; ++i) eps(i, 0) = normal(rng);
      vals[r] = std::exp(evaluate_importance(*m, fit, eps, false).log_density - lp);
    }
    const MeanSe s = mean_se(vals);
    CAPTURE(n);
    CHECK(std::fabs(s.mean - truth) < 3 * s.se);
  }
  for (int n : {4, 16}) {
    const EstimatorSpec spec = EstimatorSpec::make(Method::Rqmc, n, 1);
    std::vector<double> vals(reps);
    for (int r = 0; r < reps; ++r) {
      vals[r] = std::exp(eval_rqmc(*m, fit, spec, Vector::Constant(1, unif(rng))).log_density - lp);
    }
    const MeanSe s = mean_se(vals);
    CAPTURE(n);
    CHECK(std::fabs(s.mean - truth) < 3 * s.se);
  }
}

TEST_CASE("QMC error shrinks with n on the scalar poisson model") {
  auto m = scalar_poisson_model(3);
  const Vector theta = at({0.4});
  const double truth = poisson_evidence(3, std::exp(0.4));
  const double lp = m->log_prior(theta);
  std::vector<double> errors;
  for (int n : {4, 16, 64, 256, 1024}) {
    const EstimatorSpec spec = EstimatorSpec::make(Method::Qmc, n, 1);
    errors.push_back(std::fabs(std::exp(eval_qmc(*m, theta, spec, false).log_density - lp) - truth));
  }
  CHECK(errors[3] < errors[0]);
  CHECK(errors.back() == *std::min_element(errors.begin(), errors.end()));
}

TEST_CASE("rqmc rejects shifts outside the unit interval") {
  auto m = scalar_poisson_model(1);
  const EstimatorSpec spec = EstimatorSpec::make(Method::Rqmc, 4, 1);
  CHECK_THROWS_AS(eval_rqmc(*m, at({0.0}), spec, Vector::Constant(1, 1.0)), DomainError);
  CHECK_THROWS_AS(eval_estimator(*m, at({0.0}), spec), InvalidEstimatorSpec);
}

TEST_CASE("importance set bookkeeping") {
  auto m = gp_poisson_model(10, 1);
  const EstimatorSpec spec = EstimatorSpec::make(Method::Is, 8, 10, 3);
  const EvaluatedTarget e = eval_is(*m, m->initial_theta(), spec);
  const ImportanceSet& s = e.importance_set;
  CHECK(s.n() == 8);
  CHECK(s.z_points.rows() == 8);
  CHECK(s.log_weights.allFinite());
  CHECK(s.probabilities().sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.normalized_ess() > 0.0);
  CHECK(s.normalized_ess() <= 1.0 + 1e-12);
  CHECK(e.log_density == doctest::Approx(logsumexp(s.log_weights) - std::log(8.0)).epsilon(1e-14));
  CHECK_FALSE(s.exact_recovery);
  CHECK(eval_pm(*m, m->initial_theta(), spec.fixed_eps).importance_set.exact_recovery);
}
