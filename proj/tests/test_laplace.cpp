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
#include "adlis/laplace.hpp"

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

// Appends one eta coordinate that nothing depends on.
class Padded final : public LatentGaussianModel {
 public:
  explicit Padded(ModelPtr inner) : inner_(std::move(inner)) {}
  std::string name() const override { return "padded"; }
  int latent_dim() const override { return inner_->latent_dim(); }
  int xi_dim() const override { return inner_->xi_dim(); }
  int eta_dim() const override { return inner_->eta_dim() + 1; }
  std::vector<std::string> parameter_names() const override {
    auto n = inner_->parameter_names();
    n.push_back("pad");
    return n;
  }
  double log_prior(const Vector& theta, Vector* grad) const override {
    const double lp = inner_->log_prior(theta.head(theta.size() - 1), grad);
    if (grad) {
      grad->conservativeResize(theta.size());
      (*grad)(theta.size() - 1) = 0.0;
    }
    return lp;
  }
  Matrix kernel(const Vector& xi) const override { return inner_->kernel(xi); }
  Vector kernel_vjp(const Vector& xi, const Matrix& omega) const override {
    return inner_->kernel_vjp(xi, omega);
  }
  LikelihoodDerivatives likelihood(const Vector& eta, const Vector& z) const override {
    return inner_->likelihood(eta.head(eta.size() - 1), z);
  }
  Vector grad_eta_loglik(const Vector& eta, const Vector& z) const override {
    return pad(inner_->grad_eta_loglik(eta.head(eta.size() - 1), z));
  }
  Vector vjp_c(const Vector& eta, const Vector& z, const Vector& v) const override {
    return pad(inner_->vjp_c(eta.head(eta.size() - 1), z, v));
  }
  Vector vjp_w(const Vector& eta, const Vector& z, const Vector& w) const override {
    return pad(inner_->vjp_w(eta.head(eta.size() - 1), z, w));
  }
  Vector initial_theta() const override { return pad(inner_->initial_theta()); }
  Dataset dataset() const override { return inner_->dataset(); }

 private:
  static Vector pad(const Vector& v) {
    Vector out = Vector::Zero(v.size() + 1);
    out.head(v.size()) = v;
    return out;
  }
  ModelPtr inner_;
};

Vector grid(int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = 0.5 * i;
  return x;
}

double adla_at(const LatentGaussianModel& m, const Vector& theta) {
  return adla_log_density(fit_laplace(m, theta));
}

}  // namespace

TEST_CASE("scalar gaussian: mode and exact marginal") {
  auto m = gaussian_conjugate_model(at({0.0}), at({2.0}), 1.0, true);
  const Vector theta = at({0.0, 0.0, 0.0});
  const LaplaceFit fit = fit_laplace(*m, theta);
  CHECK(fit.path == FactorizationPath::Fast);
  CHECK(fit.z_hat(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.n_iter == 1);
  const double lp = m->log_prior(theta);
  CHECK(adla_log_density(fit) - lp == doctest::Approx(-0.5 * std::log(4 * std::numbers::pi) - 1.0).epsilon(1e-12));
  CHECK(adla_log_density(fit) - lp == doctest::Approx(-2.265512).epsilon(1e-6));
}

TEST_CASE("scalar poisson mode solves -z = e^z") {
  auto m = scalar_poisson_model(0);
  const LaplaceFit fit = fit_laplace(*m, at({0.0}));
  // bisection on z + e^z = 0
  double lo = -1.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid + std::exp(mid) > 0.0 ? hi : lo) = mid;
  }
  CHECK(std::fabs(fit.z_hat(0) - lo) < 1e-6);
  CHECK(fit.z_hat(0) == doctest::Approx(-0.567143).epsilon(1e-6));

  // warm start at the optimum: one iteration, no movement
  const LaplaceFit warm = newton_fit(*m, ModelParameters::split(at({0.0}), 1), Vector::Constant(1, lo));
  CHECK(warm.n_iter == 1);
  CHECK(std::fabs(warm.z_hat(0) - lo) <= 1e-8);
}

TEST_CASE("20-dim gaussian: ADLA equals the conjugate marginal") {
  auto m = gaussian_conjugate_model(20, 0.5, 3, true);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const Dataset data = m->dataset();
  const Vector x = data.rows.col(1), y = data.rows.col(2);
  for (int rep = 0; rep < 5; ++rep) {
    Vector theta = m->initial_theta();
    for (Eigen::Index k = 0; k < 3; ++k) theta(k) += 0.3 * normal(rng);
    Matrix cov = testing::se_kernel(x, std::exp(theta(0)), std::exp(theta(1)));
    cov.diagonal().array() += std::exp(2 * theta(2));
    const double expected = testing::gaussian_log_density(y, cov) + m->log_prior(theta);
    CHECK(std::fabs(adla_at(*m, theta) - expected) < 1e-8);
  }
}

TEST_CASE("gaussian gradient matches the conjugate closed form") {
  auto m = gaussian_conjugate_model(12, 0.5, 4, true);
  const Dataset data = m->dataset();
  const Vector x = data.rows.col(1), y = data.rows.col(2);
  const Vector theta = at({0.2, -0.1, std::log(0.6)});
  const double rho = std::exp(theta(0)), alpha = std::exp(theta(1)), s2 = std::exp(2 * theta(2));
  const Matrix k = testing::se_kernel(x, rho, alpha);
  Matrix cov = k;
  cov.diagonal().array() += s2;
  const Matrix cinv = cov.inverse();
  const Vector al = cinv * y;
  const Matrix m_tr = al * al.transpose() - cinv;
  Matrix dk_rho(k.rows(), k.cols());
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      dk_rho(i, j) = k(i, j) * (x(i) - x(j)) * (x(i) - x(j)) / (rho * rho);
  Vector expected(3);
  expected(0) = 0.5 * m_tr.cwiseProduct(dk_rho).sum();
  expected(1) = 0.5 * m_tr.cwiseProduct(2.0 * k).sum();
  expected(2) = 0.5 * m_tr.trace() * 2.0 * s2;
  Vector g_prior;
  m->log_prior(theta, &g_prior);
  expected += g_prior;

  const Vector g = adla_gradient(*m, fit_laplace(*m, theta));
  CHECK(testing::relative_error(g, expected) < 1e-8);
}

TEST_CASE("ADLA gradient vs finite differences on gp-poisson") {
  auto m = gp_poisson_model(20, 0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 10; ++rep) {
    Vector theta = m->initial_theta();
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) += 0.4 * normal(rng);
    const Vector g = adla_gradient(*m, fit_laplace(*m, theta));
    const Vector fd = testing::central_difference([&](const Vector& t) { return adla_at(*m, t); }, theta);
    CAPTURE(theta.transpose());
    CHECK(testing::relative_error(g, fd) < 1e-5);
  }
}

TEST_CASE("ADLA gradient vs finite differences on mixed-nb") {
  auto m = mixed_effects_nb_model(3, 4, 1);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 5; ++rep) {
    Vector theta = m->initial_theta();
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) += 0.3 * normal(rng);
    const Vector g = adla_gradient(*m, fit_laplace(*m, theta));
    const Vector fd = testing::central_difference([&](const Vector& t) { return adla_at(*m, t); }, theta);
    CHECK(testing::relative_error(g, fd) < 1e-5);
  }
}

TEST_CASE("ignored coordinate has zero gradient") {
  Padded m(gp_poisson_model(8, 1));
  const Vector theta = at({0.1, -0.3, 0.7});
  const Vector g = adla_gradient(m, fit_laplace(m, theta));
  CHECK(g(2) == 0.0);
}

TEST_CASE("simple cauchy uses the generic path") {
  auto m = simple_cauchy_model(2.0);
  CHECK_THROWS_AS(newton_fit(*m, ModelParameters::split(at({0.0}), 0)), NonPositiveCurvature);
  const LaplaceFit fit = fit_laplace(*m, at({0.0}));
  CHECK(fit.path == FactorizationPath::Generic);
  CHECK_THROWS_AS(adla_gradient(*m, fit), GenericPathUnsupported);
  const double adla = adla_log_density(fit);
  REQUIRE(std::isfinite(adla));

  // log prior + log int N(z; 0, 1) Cauchy(2; z, 1) dz
  const double exact =
      m->log_prior(at({0.0})) +
      std::log(testing::simpson(
          [](double z) {
            return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi) /
                   (std::numbers::pi * (1 + (2 - z) * (2 - z)));
          },
          -40, 40, 400000));
  const double gap = adla - exact;
  MESSAGE("ADLA - exact at theta = 0: " << gap);
  CHECK(std::fabs(gap) > 1e-3);
}

TEST_CASE("latent vjps") {
  auto m = gp_poisson_model(10, 2);
  const Vector theta = at({0.2, 0.1});
  const LaplaceFit fit = fit_laplace(*m, theta);
  const int dz = fit.latent_dim();

  const LatentVjp zero = latent_vjps(*m, fit, Vector::Zero(dz), Matrix::Zero(dz, dz));
  CHECK(zero.mode_theta().isZero(0.0));
  CHECK(zero.cov_theta().isZero(0.0));

  std::mt19937_64 rng(2);
  const Vector v = testing::random_vector(dz, rng);
  Matrix vv = testing::random_matrix(dz, dz, rng);
  vv = (vv + vv.transpose()).eval();
  NewtonOptions tight;
  tight.tolerance = 1e-12;
  auto fit_at = [&](const Vector& t) { return newton_fit(*m, ModelParameters::split(t, 2), std::nullopt, FactorizationPath::Fast, tight); };

  const LatentVjp r = latent_vjps(*m, fit, v, vv);
  const Vector fd_mode =
      testing::central_difference([&](const Vector& t) { return v.dot(fit_at(t).z_hat); }, theta);
  CHECK(testing::relative_error(r.xi_from_mode, fd_mode) < 1e-5);
  const Vector fd_cov = testing::central_difference(
      [&](const Vector& t) { return vv.cwiseProduct(fit_at(t).sigma).sum(); }, theta);
  CHECK(testing::relative_error(r.xi_from_cov, fd_cov) < 1e-5);

  // eta side on the mixed model
  auto nb = mixed_effects_nb_model(3, 3, 2);
  Vector tn = nb->initial_theta();
  const LaplaceFit fn = fit_laplace(*nb, tn);
  const int dn = fn.latent_dim();
  const Vector vn = testing::random_vector(dn, rng);
  Matrix vvn = testing::random_matrix(dn, dn, rng);
  vvn = (vvn + vvn.transpose()).eval();
  auto nb_fit = [&](const Vector& t) {
    return newton_fit(*nb, ModelParameters::split(t, nb->xi_dim()), std::nullopt, FactorizationPath::Fast, tight);
  };
  const LatentVjp rn = latent_vjps(*nb, fn, vn, vvn);
  const Vector fdn_mode =
      testing::central_difference([&](const Vector& t) { return vn.dot(nb_fit(t).z_hat); }, tn);
  const Vector fdn_cov = testing::central_difference(
      [&](const Vector& t) { return vvn.cwiseProduct(nb_fit(t).sigma).sum(); }, tn);
  CHECK(testing::relative_error(rn.mode_theta(), fdn_mode) < 1e-5);
  CHECK(testing::relative_error(rn.cov_theta(), fdn_cov) < 1e-5);
}

TEST_CASE("transform_latent") {
  auto m = gaussian_conjugate_model(5, 0.5, 7);
  const LaplaceFit fit = fit_laplace(*m, m->initial_theta());
  const Matrix half = transform_latent(fit, UnitCubePoints(Matrix::Constant(3, 5, 0.5)));
  for (int i = 0; i < 3; ++i) CHECK((half.row(i).transpose() - fit.z_hat).isZero(0.0));
  const Matrix zero = transform_latent(fit, Matrix(Matrix::Zero(2, 5)));
  CHECK((zero.row(1).transpose() - fit.z_hat).isZero(0.0));

  std::mt19937_64 rng(9);
  const int n = 100000;
  const Matrix z = transform_latent(fit, testing::random_matrix(n, 5, rng));
  const Vector mean = z.colwise().mean();
  const Matrix centered = z.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / (n - 1.0);
  const double scale = fit.sigma.diagonal().maxCoeff();
  CHECK(((cov - fit.sigma).array().abs() <= 0.05 * scale).all());

  CHECK_THROWS_AS(transform_latent(fit, Matrix(Matrix::Zero(2, 4))), ShapeMismatch);
}

TEST_CASE("fit invariants on random fast-path fits") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  std::vector<ModelPtr> models = {gp_poisson_model(10, 3), gp_poisson_model(30, 4),
                                  mixed_effects_nb_model(2, 5, 5), gaussian_conjugate_model(8, 0.4, 6, true)};
  for (const ModelPtr& m : models) {
    for (int rep = 0; rep < 5; ++rep) {
      Vector theta = m->initial_theta();
      for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) += 0.3 * normal(rng);
      const LaplaceFit fit = fit_laplace(*m, theta);
      REQUIRE(fit.path == FactorizationPath::Fast);
      const int dz = fit.latent_dim();
      // stationarity
      const Vector c = m->likelihood(fit.theta.eta, fit.z_hat).c;
      CHECK((c - fit.a).lpNorm<Eigen::Infinity>() <= 1e-4);
      CHECK((fit.k * fit.a - fit.z_hat).lpNorm<Eigen::Infinity>() <= 1e-8 * (1 + fit.a.lpNorm<Eigen::Infinity>()));
      CHECK((fit.k * c - fit.z_hat).lpNorm<Eigen::Infinity>() <= 1e-6 * (1 + fit.z_hat.lpNorm<Eigen::Infinity>()) +
                                                                   1e-4 * fit.k.lpNorm<Eigen::Infinity>() * dz);
      // Woodbury
      Matrix prec = fit.k.inverse();
      prec.diagonal() += fit.w_diag;
      CHECK((fit.sigma * prec - Matrix::Identity(dz, dz)).lpNorm<Eigen::Infinity>() < 1e-8 * prec.norm());
      CHECK((fit.sigma - fit.sigma.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
      // log-determinant
      if (dz <= 10) {
        Matrix ikw = Matrix::Identity(dz, dz) + fit.k * fit.w_diag.asDiagonal();
        CHECK(std::fabs(fit.half_log_det_b - 0.5 * std::log(ikw.determinant())) < 1e-10);
      }
    }
  }
}

TEST_CASE("newton errors") {
  auto m = gp_poisson_model(20, 0);
  NewtonOptions one;
  one.max_iterations = 1;
  one.tolerance = 1e-14;
  CHECK_THROWS_AS(newton_fit(*m, ModelParameters::split(m->initial_theta(), 2), std::nullopt,
                             FactorizationPath::Fast, one),
                  MaxIterationsExceeded);
}

TEST_CASE("generic path agrees with the fast path") {
  auto m = gp_poisson_model(10, 5);
  const ModelParameters p = ModelParameters::split(at({0.3, 0.2}), 2);
  const LaplaceFit fast = newton_fit(*m, p);
  const LaplaceFit gen = newton_fit(*m, p, std::nullopt, FactorizationPath::Generic);
  CHECK((fast.z_hat - gen.z_hat).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(adla_log_density(fast) == doctest::Approx(adla_log_density(gen)).epsilon(1e-8));
  CHECK((fast.sigma - gen.sigma).lpNorm<Eigen::Infinity>() < 1e-6);
}
