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

#include "adlis/samplers.hpp"

#include "adlis/errors.hpp"
#include "adlis/laplace.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace adlis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Vector q;
  Vector p;
  TargetValue v;
};

TargetValue safe_eval(const TargetFn& target, const Vector& q, EvalCounters& counters) {
  ++counters.gradient_evals;
  try {
    TargetValue v = target(q);
    if (!std::isfinite(v.log_density)) v.log_density = -kInf;
    if (!v.grad.allFinite()) throw NonFiniteGradient("non-finite gradient");
    return v;
  } catch (const Error&) {
    TargetValue v;
    v.log_density = -kInf;
    v.grad = Vector::Zero(q.size());
    return v;
  }
}

// Stan-style multinomial NUTS with a diagonal metric.
class Nuts {
 public:
  Nuts(const TargetFn& target, const NutsConfig& config, std::mt19937_64& rng, EvalCounters& counters,
       int dim)
      : target_(target), config_(config), rng_(rng), counters_(counters),
        inv_metric_(Vector::Ones(dim)) {}

  struct Result {
    PhasePoint point;
    double accept_stat = 0.0;
    bool divergent = false;
    int depth = 0;
  };

  double step_size = 1.0;
  const Vector& inv_metric() const { return inv_metric_; }
  void set_inv_metric(const Vector& m) { inv_metric_ = m; }

  double hamiltonian(const PhasePoint& z) const {
    return -z.v.log_density + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
  }

  void sample_momentum(PhasePoint& z) {
    z.p.resize(z.q.size());
    for (Eigen::Index i = 0; i < z.q.size(); ++i) z.p(i) = normal_(rng_) / std::sqrt(inv_metric_(i));
  }

  void leapfrog(PhasePoint& z, double eps) {
    z.p += 0.5 * eps * z.v.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    z.v = safe_eval(target_, z.q, counters_);
    z.p += 0.5 * eps * z.v.grad;
  }

  // Doubles or halves the step size until the one-step acceptance crosses 0.8.
  void init_step_size(const PhasePoint& start) {
    PhasePoint z = start;
    sample_momentum(z);
    double h0 = hamiltonian(z);
    leapfrog(z, step_size);
    double h = hamiltonian(z);
    if (std::isnan(h)) h = kInf;
    const int direction = (h0 - h) > std::log(0.8) ? 1 : -1;
    for (int iter = 0; iter < 100; ++iter) {
      z = start;
      sample_momentum(z);
      h0 = hamiltonian(z);
      leapfrog(z, step_size);
      h = hamiltonian(z);
      if (std::isnan(h)) h = kInf;
      const double dh = h0 - h;
      if (direction == 1 && !(dh > std::log(0.8))) break;
      if (direction == -1 && !(dh < std::log(0.8))) break;
      step_size = direction == 1 ? 2.0 * step_size : 0.5 * step_size;
      if (step_size > 1e7) throw BadInit("step size diverged during initialization");
      if (step_size < 1e-12) throw BadInit("step size collapsed during initialization");
    }
  }

  Result transition(const PhasePoint& start) {
    ++counters_.trajectories;
    PhasePoint z = start;
    sample_momentum(z);
    const double h0 = hamiltonian(z);

    PhasePoint z_fwd = z, z_bck = z, z_sample = z, z_propose = z;
    Vector p_fwd_fwd = z.p, p_sharp_fwd_fwd = inv_metric_.cwiseProduct(z.p);
    Vector p_fwd_bck = z.p, p_sharp_fwd_bck = p_sharp_fwd_fwd;
    Vector p_bck_fwd = z.p, p_sharp_bck_fwd = p_sharp_fwd_fwd;
    Vector p_bck_bck = z.p, p_sharp_bck_bck = p_sharp_fwd_fwd;
    Vector rho = z.p;
    double log_sum_weight = 0.0;
    int n_leapfrog = 0;
    double sum_metro = 0.0;
    divergent_ = false;
    int depth = 0;

    while (depth < config_.max_tree_depth) {
      Vector rho_fwd = Vector::Zero(rho.size()), rho_bck = Vector::Zero(rho.size());
      bool valid;
      double lsw_subtree = -kInf;
      if (uniform_(rng_) > 0.5) {
        cur_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                           p_fwd_fwd, h0, 1.0, n_leapfrog, lsw_subtree, sum_metro);
        z_fwd = cur_;
      } else {
        cur_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                           p_bck_bck, h0, -1.0, n_leapfrog, lsw_subtree, sum_metro);
        z_bck = cur_;
      }
      if (!valid) break;
      ++depth;
      if (lsw_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (uniform_(rng_) < std::exp(lsw_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_add(log_sum_weight, lsw_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    Result r;
    r.point = z_sample;
    r.accept_stat = n_leapfrog > 0 ? sum_metro / n_leapfrog : 0.0;
    r.divergent = divergent_;
    r.depth = depth;
    return r;
  }

 private:
  static bool criterion(const Vector& p_sharp_minus, const Vector& p_sharp_plus, const Vector& rho) {
    return p_sharp_plus.dot(rho) > 0 && p_sharp_minus.dot(rho) > 0;
  }

  bool build_tree(int depth, PhasePoint& z_propose, Vector& p_sharp_beg, Vector& p_sharp_end,
                  Vector& rho, Vector& p_beg, Vector& p_end, double h0, double sign,
                  int& n_leapfrog, double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      leapfrog(cur_, sign * step_size);
      ++n_leapfrog;
      double h = hamiltonian(cur_);
      if (std::isnan(h)) h = kInf;
      if (h - h0 > config_.divergence_threshold) divergent_ = true;
      log_sum_weight = log_add(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
      z_propose = cur_;
      p_sharp_beg = inv_metric_.cwiseProduct(cur_.p);
      p_sharp_end = p_sharp_beg;
      rho += cur_.p;
      p_beg = cur_.p;
      p_end = p_beg;
      return !divergent_;
    }

    double lsw_init = -kInf;
    Vector p_init_end(cur_.p.size()), p_sharp_init_end(cur_.p.size());
    Vector rho_init = Vector::Zero(rho.size());
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end,
                    h0, sign, n_leapfrog, lsw_init, sum_metro)) {
      return false;
    }

    PhasePoint z_propose_final = cur_;
    double lsw_final = -kInf;
    Vector p_final_beg(cur_.p.size()), p_sharp_final_beg(cur_.p.size());
    Vector rho_final = Vector::Zero(rho.size());
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg,
                    p_end, h0, sign, n_leapfrog, lsw_final, sum_metro)) {
      return false;
    }

    const double lsw_subtree = log_add(lsw_init, lsw_final);
    log_sum_weight = log_add(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree) {
      z_propose = z_propose_final;
    } else if (uniform_(rng_) < std::exp(lsw_final - lsw_subtree)) {
      z_propose = z_propose_final;
    }

    const Vector rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && criterion(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  const TargetFn& target_;
  const NutsConfig& config_;
  std::mt19937_64& rng_;
  EvalCounters& counters_;
  Vector inv_metric_;
  PhasePoint cur_;
  bool divergent_ = false;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

class DualAveraging {
 public:
  explicit DualAveraging(double delta) : delta_(delta) {}

  void restart(double step_size) {
    mu_ = std::log(10.0 * step_size);
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  double learn(double accept_stat) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double t = static_cast<double>(counter_);
    const double eta = 1.0 / (t + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(t) / kGamma;
    const double x_eta = std::pow(t, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step_size() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double delta_;
  double mu_ = 0.0;
  long counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

PhasePoint initial_point(const TargetFn& target, const Vector& init, EvalCounters& counters) {
  PhasePoint z;
  z.q = init;
  try {
    z.v = target(init);
  } catch (const Error& e) {
    throw BadInit(std::string("target failed at the initial point: ") + e.what());
  }
  ++counters.gradient_evals;
  if (!std::isfinite(z.v.log_density) || !z.v.grad.allFinite() || z.v.grad.size() != init.size()) {
    throw BadInit("non-finite log density or gradient at the initial point");
  }
  return z;
}

// Warmup: [0, W/2) step size only, [W/2, 9W/10) also collects variances for
// the diagonal metric, [9W/10, W) step size only with the new metric.
PhasePoint warmup(Nuts& nuts, PhasePoint z, const NutsConfig& config, int& divergences) {
  const int w = config.warmup_draws;
  nuts.init_step_size(z);
  DualAveraging da(config.target_accept);
  da.restart(nuts.step_size);
  const int slow_begin = w / 2;
  const int slow_end = (9 * w) / 10;
  const bool adapt_metric = w >= 20;
  Vector mean = Vector::Zero(z.q.size()), m2 = Vector::Zero(z.q.size());
  long count = 0;
  for (int i = 0; i < w; ++i) {
    const Nuts::Result r = nuts.transition(z);
    z = r.point;
    if (r.divergent) ++divergences;
    nuts.step_size = da.learn(r.accept_stat);
    if (adapt_metric && i >= slow_begin && i < slow_end) {
      ++count;
      const Vector delta = z.q - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta.cwiseProduct(z.q - mean);
    }
    if (adapt_metric && i == slow_end - 1 && count >= 2) {
      const double n = static_cast<double>(count);
      Vector var = m2 / (n - 1.0);
      var = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
      nuts.set_inv_metric(var);
      nuts.init_step_size(z);
      da.restart(nuts.step_size);
    }
  }
  if (w > 0) nuts.step_size = da.final_step_size();
  return z;
}

bool keep_recovery(const NutsConfig& config, int draw) {
  return config.recovery_thin > 0 && draw % config.recovery_thin == 0;
}

}  // namespace

void NutsConfig::validate() const {
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw BadInit("target_accept must lie in (0,1)");
  if (max_tree_depth < 1) throw BadInit("max_tree_depth must be >= 1");
  if (warmup_draws < 0 || main_draws < 0) throw BadInit("draw counts must be non-negative");
  if (recovery_thin < 0) throw BadInit("recovery_thin must be non-negative");
}

int ChainOutput::n_divergent() const {
  int n = 0;
  for (auto d : divergent) n += d;
  return n;
}

ChainOutput nuts_sample(const TargetFn& target, const NutsConfig& config, const Vector& init) {
  config.validate();
  Stopwatch clock;
  std::mt19937_64 rng(config.seed);
  ChainOutput out;
  const Eigen::Index dim = init.size();
  PhasePoint z = initial_point(target, init, out.counters);
  Nuts nuts(target, config, rng, out.counters, static_cast<int>(dim));
  z = warmup(nuts, z, config, out.warmup_divergences);

  const int m = config.main_draws;
  out.draws.resize(m, dim);
  out.log_densities.resize(m);
  out.divergent.assign(m, 0);
  out.wall_times.resize(m);
  out.acceptance_stats.resize(m);
  out.tree_depths.resize(m);
  out.recovery_inputs.resize(m);
  for (int i = 0; i < m; ++i) {
    const Nuts::Result r = nuts.transition(z);
    z = r.point;
    out.draws.row(i) = z.q.transpose();
    out.log_densities(i) = z.v.log_density;
    out.divergent[i] = r.divergent;
    out.acceptance_stats(i) = r.accept_stat;
    out.tree_depths(i) = r.depth;
    if (keep_recovery(config, i) && z.v.detail) out.recovery_inputs[i] = z.v.detail->importance_set;
    out.wall_times(i) = clock.seconds();
  }
  out.step_size = nuts.step_size;
  out.inv_metric = nuts.inv_metric();
  return out;
}

TargetFn base_target(const LatentGaussianModel& model) {
  const int nx = model.xi_dim();
  const int nt = model.theta_dim();
  const int dz = model.latent_dim();
  return [&model, nx, nt, dz](const Vector& q) {
    if (q.size() != nt + dz) throw ShapeMismatch("base target state has the wrong size");
    const Vector theta = q.head(nt);
    const Vector nu = q.tail(dz);
    const ModelParameters p = ModelParameters::split(theta, nx);
    const LowerTriangularFactor l = cholesky(model.kernel(p.xi));
    const Vector z = l.matrix() * nu;
    const LikelihoodDerivatives d = model.likelihood(p.eta, z);

    TargetValue v;
    v.grad.resize(nt + dz);
    Vector g_prior;
    v.log_density = model.log_prior(theta, &g_prior) - 0.5 * nu.squaredNorm() -
                    0.5 * dz * std::log(2.0 * std::numbers::pi) + d.log_lik;
    v.grad.head(nt) = g_prior;
    if (nx > 0) {
      // <c, dL nu> = <c nu^T, dL>
      const Matrix k_bar = cholesky_backward(l, d.c * nu.transpose());
      v.grad.head(nx) += model.kernel_vjp(p.xi, k_bar);
    }
    if (model.eta_dim() > 0) v.grad.segment(nx, model.eta_dim()) += model.grad_eta_loglik(p.eta, z);
    v.grad.tail(dz) = l.matrix().transpose() * d.c - nu;

    auto detail = std::make_shared<EvaluatedTarget>();
    detail->log_density = v.log_density;
    detail->importance_set.z_points = z.transpose();
    detail->importance_set.log_weights = Vector::Zero(1);
    detail->importance_set.exact_recovery = true;
    v.detail = std::move(detail);
    return v;
  };
}

TargetFn marginal_target(const LatentGaussianModel& model, const EstimatorSpec& spec, bool warm_start) {
  spec.validate(model.latent_dim());
  if (spec.method != Method::Adla && spec.method != Method::Is && spec.method != Method::Qmc) {
    throw IncompatibleMethod("marginal_target handles adla, is and qmc; got " + to_string(spec.method));
  }
  if (!model.log_concave()) {
    throw IncompatibleMethod("gradient-based marginal targets need a log-concave likelihood; " +
                             model.name() + " is density-only");
  }
  Matrix eps;
  if (spec.method == Method::Is) eps = spec.fixed_eps;
  if (spec.method == Method::Qmc) eps = inverse_cdf_rows(spec.lds);
  auto last_mode = std::make_shared<std::optional<Vector>>();
  const Method method = spec.method;
  return [&model, eps, method, warm_start, last_mode](const Vector& theta) {
    auto fit = std::make_shared<const LaplaceFit>(
        fit_laplace(model, theta, warm_start ? *last_mode : std::nullopt));
    if (warm_start) *last_mode = fit->z_hat;
    auto detail = std::make_shared<EvaluatedTarget>();
    if (method == Method::Adla) {
      detail->log_density = adla_log_density(*fit);
      detail->grad_theta = adla_gradient(model, *fit);
      detail->importance_set.z_points = fit->z_hat.transpose();
      detail->importance_set.log_weights = Vector::Constant(1, detail->log_density);
      detail->fit = fit;
    } else {
      *detail = evaluate_importance(model, fit, eps, true);
    }
    TargetValue v;
    v.log_density = detail->log_density;
    v.grad = detail->grad_theta;
    v.detail = std::move(detail);
    return v;
  };
}

TargetFn pm_target(const LatentGaussianModel& model, int n) {
  if (n < 1) throw InvalidEstimatorSpec("PM needs n >= 1");
  if (!model.log_concave()) {
    throw IncompatibleMethod("PM needs a log-concave likelihood; " + model.name() + " is density-only");
  }
  const int nt = model.theta_dim();
  const int dz = model.latent_dim();
  return [&model, n, nt, dz](const Vector& q) {
    if (q.size() != nt + n * dz) throw ShapeMismatch("PM state has the wrong size");
    const Matrix eps = Eigen::Map<const Matrix>(q.data() + nt, n, dz);
    auto detail = std::make_shared<EvaluatedTarget>(eval_pm(model, q.head(nt), eps, true));
    TargetValue v;
    v.log_density = detail->log_density;
    v.grad.resize(q.size());
    v.grad.head(nt) = detail->grad_theta;
    v.grad.tail(n * dz) = Eigen::Map<const Vector>(detail->grad_aux->data(), n * dz);
    v.detail = std::move(detail);
    return v;
  };
}

ChainOutput mwg_sample(const LatentGaussianModel& model, const EstimatorSpec& spec,
                       const NutsConfig& config, const Vector& theta0, const Vector& u0) {
  config.validate();
  spec.validate(model.latent_dim());
  if (spec.method != Method::Rqmc && spec.method != Method::Qmc) {
    throw IncompatibleMethod("MwG samples the RQMC target; got " + to_string(spec.method));
  }
  if (!model.log_concave()) {
    throw IncompatibleMethod("RQMC sampling needs a log-concave likelihood; " + model.name() +
                             " is density-only");
  }
  const int dz = model.latent_dim();
  if (u0.size() != dz) throw ShapeMismatch("U0 must have d_z entries");

  Stopwatch clock;
  std::mt19937_64 rng(config.seed);
  ChainOutput out;
  Vector u = u0;
  TargetFn target = [&model, &spec, &u, &out](const Vector& theta) {
    ++out.counters.laplace_fits;
    auto detail = std::make_shared<EvaluatedTarget>(eval_rqmc(model, theta, spec, u, true));
    TargetValue v;
    v.log_density = detail->log_density;
    v.grad = detail->grad_theta;
    v.detail = std::move(detail);
    return v;
  };

  PhasePoint z = initial_point(target, theta0, out.counters);
  Nuts nuts(target, config, rng, out.counters, static_cast<int>(theta0.size()));
  z = warmup(nuts, z, config, out.warmup_divergences);

  const int m = config.main_draws;
  out.draws.resize(m, theta0.size());
  out.log_densities.resize(m);
  out.divergent.assign(m, 0);
  out.wall_times.resize(m);
  out.acceptance_stats.resize(m);
  out.tree_depths.resize(m);
  out.recovery_inputs.resize(m);
  out.aux_trace = Matrix(m, dz);
  std::uniform_real_distribution<double> step(-0.1, 0.1);
  std::uniform_real_distribution<double> unif;
  long accepted = 0;
  for (int i = 0; i < m; ++i) {
    const Nuts::Result r = nuts.transition(z);
    z = r.point;
    out.divergent[i] = r.divergent;
    out.acceptance_stats(i) = r.accept_stat;
    out.tree_depths(i) = r.depth;

    // Metropolis sweep over U at fixed theta, reusing the Laplace fit.
    std::shared_ptr<const EvaluatedTarget> current = z.v.detail;
    double current_ld = z.v.log_density;
    if (!current || !current->fit) {
      ++out.counters.laplace_fits;
      current = std::make_shared<EvaluatedTarget>(eval_rqmc(model, z.q, spec, u, false));
      current_ld = current->log_density;
    }
    const auto fit = current->fit;
    for (int d = 0; d < dz; ++d) {
      Vector proposal = u;
      double v = proposal(d) + step(rng);
      v -= std::floor(v);
      if (v >= 1.0) v = 0.0;
      proposal(d) = v;
      ++out.counters.density_evals;
      auto cand = std::make_shared<EvaluatedTarget>(eval_rqmc(model, fit, spec, proposal, false));
      const double log_ratio = cand->log_density - current_ld;
      if (std::log(unif(rng)) < log_ratio) {
        u = proposal;
        current_ld = cand->log_density;
        current = std::move(cand);
        ++accepted;
      }
    }
    // Gradient at the new U for the next trajectory; the fit is unchanged.
    if (current != z.v.detail) {
      ++out.counters.gradient_evals;
      auto refreshed = std::make_shared<EvaluatedTarget>(eval_rqmc(model, fit, spec, u, true));
      z.v.log_density = refreshed->log_density;
      z.v.grad = refreshed->grad_theta;
      z.v.detail = std::move(refreshed);
    }

    out.draws.row(i) = z.q.transpose();
    out.log_densities(i) = z.v.log_density;
    out.aux_trace->row(i) = u.transpose();
    if (keep_recovery(config, i)) out.recovery_inputs[i] = z.v.detail->importance_set;
    out.wall_times(i) = clock.seconds();
  }
  out.step_size = nuts.step_size;
  out.inv_metric = nuts.inv_metric();
  out.mh_acceptance = m > 0 && dz > 0 ? static_cast<double>(accepted) / (static_cast<double>(m) * dz) : 0.0;
  return out;
}

ChainOutput run_inference(const LatentGaussianModel& model, const EstimatorSpec& spec,
                          const NutsConfig& config) {
  const int nt = model.theta_dim();
  const int dz = model.latent_dim();
  const Vector theta0 = model.initial_theta();
  ChainOutput out;
  switch (spec.method) {
    case Method::Base: {
      Vector init = Vector::Zero(nt + dz);
      init.head(nt) = theta0;
      out = nuts_sample(base_target(model), config, init);
      out.aux_trace = Matrix(out.draws.rightCols(dz));
      out.draws = Matrix(out.draws.leftCols(nt));
      break;
    }
    case Method::Adla:
    case Method::Is:
    case Method::Qmc:
      out = nuts_sample(marginal_target(model, spec, config.warm_start), config, theta0);
      break;
    case Method::Pm: {
      Vector init = Vector::Zero(nt + spec.n * dz);
      init.head(nt) = theta0;
      out = nuts_sample(pm_target(model, spec.n), config, init);
      out.aux_trace = Matrix(out.draws.rightCols(spec.n * dz));
      out.draws = Matrix(out.draws.leftCols(nt));
      break;
    }
    case Method::Rqmc: {
      std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
      std::uniform_real_distribution<double> unif;
      Vector u0(dz);
      for (auto& x : u0) x = unif(rng);
      out = mwg_sample(model, spec, config, theta0, u0);
      break;
    }
  }
  out.names = model.parameter_names();
  return out;
}

std::vector<ChainOutput> run_chains(const LatentGaussianModel& model, const EstimatorSpec& spec,
                                    const NutsConfig& config, int chains) {
  if (chains < 1) throw BadInit("need at least one chain");
  std::vector<ChainOutput> outputs(chains);
  std::vector<std::exception_ptr> errors(chains);
  auto run_one = [&](int c) {
    try {
      NutsConfig cfg = config;
      cfg.seed = config.seed + static_cast<std::uint64_t>(c);
      outputs[c] = run_inference(model, spec, cfg);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  for (int begin = 0; begin < chains; begin += static_cast<int>(hw)) {
    std::vector<std::thread> pool;
    const int end = std::min(chains, begin + static_cast<int>(hw));
    for (int c = begin; c < end; ++c) pool.emplace_back(run_one, c);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return outputs;
}

}  // namespace adlis
