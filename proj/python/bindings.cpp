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
#include "adlis/model.hpp"
#include "adlis/numerics.hpp"
#include "adlis/recovery.hpp"
#include "adlis/samplers.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace adlis;

namespace {

EstimatorSpec make_spec(const LatentGaussianModel& model, const std::string& method, int n, std::uint64_t seed) {
  return EstimatorSpec::make(parse_method(method), n, model.latent_dim(), seed);
}

py::dict evaluated_to_dict(const EvaluatedTarget& t) {
  py::dict d;
  d["log_density"] = t.log_density;
  d["grad_theta"] = t.grad_theta;
  if (t.grad_aux) d["grad_aux"] = *t.grad_aux;
  d["z_points"] = t.importance_set.z_points;
  d["log_weights"] = t.importance_set.log_weights;
  return d;
}

py::dict chain_to_dict(const ChainOutput& c) {
  py::dict d;
  d["names"] = c.names;
  d["draws"] = c.draws;
  d["log_densities"] = c.log_densities;
  d["divergent"] = std::vector<int>(c.divergent.begin(), c.divergent.end());
  d["wall_times"] = c.wall_times;
  d["acceptance_stats"] = c.acceptance_stats;
  d["tree_depths"] = c.tree_depths;
  if (c.aux_trace) d["aux_trace"] = *c.aux_trace;
  d["step_size"] = c.step_size;
  d["inv_metric"] = c.inv_metric;
  d["warmup_divergences"] = c.warmup_divergences;
  d["mh_acceptance"] = c.mh_acceptance;
  d["gradient_evals"] = c.counters.gradient_evals;
  d["density_evals"] = c.counters.density_evals;
  d["trajectories"] = c.counters.trajectories;
  d["laplace_fits"] = c.counters.laplace_fits;
  return d;
}

NutsConfig make_config(int draws, int warmup, std::uint64_t seed, double target_accept, int max_tree_depth) {
  NutsConfig cfg;
  cfg.main_draws = draws;
  cfg.warmup_draws = warmup;
  cfg.seed = seed;
  cfg.target_accept = target_accept;
  cfg.max_tree_depth = max_tree_depth;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_adlis, m) {
  m.doc() = "Laplace-based importance sampling for latent Gaussian models";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<DimensionUnsupported>(m, "DimensionUnsupported", base.ptr());
  py::register_exception<MaxIterationsExceeded>(m, "MaxIterationsExceeded", base.ptr());
  py::register_exception<NonPositiveCurvature>(m, "NonPositiveCurvature", base.ptr());
  py::register_exception<GenericPathUnsupported>(m, "GenericPathUnsupported", base.ptr());
  py::register_exception<InvalidEstimatorSpec>(m, "InvalidEstimatorSpec", base.ptr());
  py::register_exception<BadInit>(m, "BadInit", base.ptr());
  py::register_exception<IncompatibleMethod>(m, "IncompatibleMethod", base.ptr());
  py::register_exception<DegenerateWeights>(m, "DegenerateWeights", base.ptr());
  py::register_exception<TooShort>(m, "TooShort", base.ptr());
  py::register_exception<NonConvergentQuadrature>(m, "NonConvergentQuadrature", base.ptr());

  // pybind11 holders cannot be const; the model itself is immutable.
  py::class_<LatentGaussianModel, std::shared_ptr<LatentGaussianModel>>(m, "Model")
      .def_property_readonly("name", &LatentGaussianModel::name)
      .def_property_readonly("latent_dim", &LatentGaussianModel::latent_dim)
      .def_property_readonly("xi_dim", &LatentGaussianModel::xi_dim)
      .def_property_readonly("eta_dim", &LatentGaussianModel::eta_dim)
      .def_property_readonly("theta_dim", &LatentGaussianModel::theta_dim)
      .def_property_readonly("parameter_names", &LatentGaussianModel::parameter_names)
      .def_property_readonly("log_concave", &LatentGaussianModel::log_concave)
      .def("initial_theta", &LatentGaussianModel::initial_theta)
      .def("log_prior", [](const LatentGaussianModel& self, const Vector& theta) { return self.log_prior(theta); })
      .def("kernel", &LatentGaussianModel::kernel, py::arg("xi"))
      .def("log_likelihood", &LatentGaussianModel::log_likelihood, py::arg("eta"), py::arg("z"))
      .def("dataset", [](const LatentGaussianModel& self) {
        const Dataset d = self.dataset();
        return py::make_tuple(d.columns, d.rows);
      });

  m.def(
      "make_model",
      [](const std::string& id, int size, std::uint64_t seed) {
        return std::const_pointer_cast<LatentGaussianModel>(make_model(id, size, seed));
      },
      py::arg("id"), py::arg("size"), py::arg("seed") = 0,
        "gaussian, gaussian-sigma, gp-poisson, scalar-poisson, mixed-nb or simple-cauchy");

  m.def(
      "fit_laplace",
      [](const LatentGaussianModel& model, const Vector& theta) {
        const LaplaceFit fit = fit_laplace(model, theta);
        py::dict d;
        d["z_hat"] = fit.z_hat;
        d["sigma"] = fit.sigma;
        d["n_iter"] = fit.n_iter;
        d["generic_path"] = fit.path == FactorizationPath::Generic;
        d["log_density"] = adla_log_density(fit);
        return d;
      },
      py::arg("model"), py::arg("theta"));

  m.def(
      "evaluate",
      [](const LatentGaussianModel& model, const Vector& theta, const std::string& method, int n,
         std::uint64_t seed, bool with_gradient) {
        return evaluated_to_dict(eval_estimator(model, theta, make_spec(model, method, n, seed), with_gradient));
      },
      py::arg("model"), py::arg("theta"), py::arg("method") = "adla", py::arg("n") = 1, py::arg("seed") = 0,
      py::arg("with_gradient") = true, "ADLA, IS or QMC estimate of log pi(theta, y) and its gradient");

  m.def(
      "evaluate_pm",
      [](const LatentGaussianModel& model, const Vector& theta, const Matrix& eps, bool with_gradient) {
        return evaluated_to_dict(eval_pm(model, theta, eps, with_gradient));
      },
      py::arg("model"), py::arg("theta"), py::arg("eps"), py::arg("with_gradient") = true);

  m.def(
      "evaluate_rqmc",
      [](const LatentGaussianModel& model, const Vector& theta, int n, const Vector& shift, bool with_gradient) {
        return evaluated_to_dict(
            eval_rqmc(model, theta, make_spec(model, "rqmc", n, 0), shift, with_gradient));
      },
      py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("shift"), py::arg("with_gradient") = true);

  m.def(
      "sample",
      [](const LatentGaussianModel& model, const std::string& method, int n, int draws, int warmup,
         std::uint64_t seed, int chains, double target_accept, int max_tree_depth) {
        const NutsConfig cfg = make_config(draws, warmup, seed, target_accept, max_tree_depth);
        const EstimatorSpec spec = make_spec(model, method, n, seed);
        std::vector<ChainOutput> out;
        {
          py::gil_scoped_release release;
          out = run_chains(model, spec, cfg, chains);
        }
        py::list result;
        for (const auto& c : out) result.append(chain_to_dict(c));
        return result;
      },
      py::arg("model"), py::arg("method") = "adla", py::arg("n") = 1, py::arg("draws") = 1000,
      py::arg("warmup") = 1000, py::arg("seed") = 0, py::arg("chains") = 1, py::arg("target_accept") = 0.8,
      py::arg("max_tree_depth") = 10, "Runs NUTS (or MwG for rqmc); chain c uses seed + c");

  m.def(
      "sample_index",
      [](const Matrix& z_points, const Vector& log_weights, std::uint64_t seed) {
        ImportanceSet set;
        set.z_points = z_points;
        set.log_weights = log_weights;
        std::mt19937_64 rng(seed);
        return sample_index(set, rng);
      },
      py::arg("z_points"), py::arg("log_weights"), py::arg("seed") = 0);

  m.def(
      "ess",
      [](const Vector& series) {
        const EssResult e = ess(series);
        return py::make_tuple(e.ess, e.degenerate);
      },
      py::arg("series"));

  m.def(
      "quadrature_marginal",
      [](const LatentGaussianModel& model, const Vector& theta, double tol) {
        return quadrature_marginal(model, theta, tol).log_value;
      },
      py::arg("model"), py::arg("theta"), py::arg("tol") = 1e-10);

  m.def("latent_posterior_cdf", &latent_posterior_cdf, py::arg("model"), py::arg("theta"), py::arg("z"),
        py::arg("tol") = 1e-10);

  m.def(
      "u_grid_scan",
      [](const LatentGaussianModel& model, const Vector& theta, int n, int grid_size) {
        const UGrid g = u_grid_scan(model, theta, n, grid_size);
        py::dict d;
        d["u"] = g.u;
        d["density"] = g.density;
        d["jumps"] = g.jumps;
        d["max_min_ratio"] = g.max_min_ratio;
        return d;
      },
      py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("grid_size") = 5000);

  m.def("sobol_points", [](int dim, int n) { return sobol_points(dim, n).points(); }, py::arg("dim"),
        py::arg("n"));
}
